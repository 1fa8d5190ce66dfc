"""JSON run configuration: schema version 1.

The document mirrors RunConfig with nested ``grid``, ``initial`` and
``schedule`` objects.  Unknown keys are rejected everywhere (typo
safety) and ``schema_version`` is mandatory.  ``to_dict`` resolves every
default, so the config echo a run writes reproduces the run bit-exactly
when fed back in.  The stabilization constant is spelled ``lambda`` in
JSON and ``lam`` on the Python side.
"""

from __future__ import annotations

import json
import math

from . import stepping
from .errors import ConfigError
from .harness import RunConfig

SCHEMA_VERSION = 1

_TOP_REQUIRED = {"schema_version", "flow", "eps2", "lambda", "c0", "sigma",
                 "grid", "initial", "schedule", "T"}
_TOP_OPTIONAL = {"v_kind", "newton_iters", "seed", "record_every",
                 "snapshot_times", "ratio_policy", "first_step_cap", "dt_ref"}

_SCHEDULE_KEYS = {
    "uniform": ({"kind", "N"}, {"kind", "N"}),
    "perturbed": ({"kind", "N"}, {"kind", "N", "amplitude"}),
    "adaptive": ({"kind", "dt_min", "dt_max", "gamma_adp"},
                 {"kind", "dt_min", "dt_max", "gamma_adp", "ratio_cap",
                  "dt_init", "energy_source"}),
    "explicit": ({"kind", "dts"}, {"kind", "dts"}),
}


def _check_keys(obj, required, allowed, section):
    if not isinstance(obj, dict):
        raise ConfigError(f"{section} must be an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {section}")
    missing = sorted(required - set(obj))
    if missing:
        raise ConfigError(f"missing required key(s) {missing} in {section}")


def _num(obj, key, section, cast=float):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {v!r}")
    if cast is int and not float(v).is_integer():
        raise ConfigError(f"{section}.{key} must be an integer, got {v!r}")
    return cast(v)


def _build_schedule(obj, T):
    _check_keys(obj, {"kind"}, set().union(*(a for _, a in _SCHEDULE_KEYS.values())),
                "schedule")
    kind = obj["kind"]
    if kind not in _SCHEDULE_KEYS:
        raise ConfigError(f"schedule.kind must be one of {sorted(_SCHEDULE_KEYS)}, got {kind!r}")
    required, allowed = _SCHEDULE_KEYS[kind]
    _check_keys(obj, required, allowed, "schedule")
    if kind == "uniform":
        return stepping.uniform_schedule(T, _num(obj, "N", "schedule", int))
    if kind == "perturbed":
        # dts stay unmaterialized; the run derives them from the config seed.
        return stepping.Schedule(kind="perturbed", T=T,
                                 N=_num(obj, "N", "schedule", int),
                                 amplitude=float(obj.get("amplitude", 0.4)))
    if kind == "adaptive":
        return stepping.adaptive_schedule(
            T,
            _num(obj, "dt_min", "schedule"),
            _num(obj, "dt_max", "schedule"),
            _num(obj, "gamma_adp", "schedule"),
            ratio_cap=float(obj.get("ratio_cap", stepping.DEFAULT_RATIO_CAP)),
            dt_init=obj.get("dt_init"),
            energy_source=obj.get("energy_source", "modified"),
        )
    dts = obj["dts"]
    if not isinstance(dts, list) or not dts:
        raise ConfigError("schedule.dts must be a nonempty list of step sizes")
    sched = stepping.explicit_schedule(dts)
    if abs(sched.T - T) > 1e-9 * max(1.0, T):
        raise ConfigError(f"explicit schedule sums to {sched.T!r}, but T = {T!r}")
    return sched


def from_dict(doc: dict) -> RunConfig:
    _check_keys(doc, _TOP_REQUIRED, _TOP_REQUIRED | _TOP_OPTIONAL, "config")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version {doc['schema_version']!r} unsupported; this build reads {SCHEMA_VERSION}"
        )
    grid = doc["grid"]
    _check_keys(grid, {"nx", "ny"}, {"nx", "ny", "lx", "ly", "dealias"}, "grid")
    initial = doc["initial"]
    _check_keys(initial, {"kind"}, {"kind", "lo", "hi", "path"}, "initial")
    T = _num(doc, "T", "config")
    snapshot_times = doc.get("snapshot_times", [])
    if not isinstance(snapshot_times, list):
        raise ConfigError("snapshot_times must be a list of times")
    try:
        return RunConfig(
            flow=doc["flow"],
            eps2=_num(doc, "eps2", "config"),
            lam=_num(doc, "lambda", "config"),
            c0=_num(doc, "c0", "config"),
            sigma=_num(doc, "sigma", "config"),
            v_kind=doc.get("v_kind", "linear"),
            nx=_num(grid, "nx", "grid", int),
            ny=_num(grid, "ny", "grid", int),
            lx=float(grid.get("lx", 2.0 * math.pi)),
            ly=float(grid.get("ly", 2.0 * math.pi)),
            dealias=bool(grid.get("dealias", False)),
            initial_kind=initial["kind"],
            initial_lo=float(initial.get("lo", -0.05)),
            initial_hi=float(initial.get("hi", 0.05)),
            initial_path=initial.get("path"),
            schedule=_build_schedule(doc["schedule"], T),
            T=T,
            newton_iters=int(doc.get("newton_iters", 4)),
            seed=int(doc.get("seed", 0)),
            record_every=int(doc.get("record_every", 1)),
            snapshot_times=tuple(float(s) for s in snapshot_times),
            ratio_policy=doc.get("ratio_policy", "warn"),
            first_step_cap=(None if doc.get("first_step_cap") is None
                            else float(doc["first_step_cap"])),
            dt_ref=float(doc.get("dt_ref", 1e-4)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _schedule_dict(sched: stepping.Schedule) -> dict:
    if sched.kind == "uniform":
        return {"kind": "uniform", "N": sched.N}
    if sched.kind == "perturbed":
        return {"kind": "perturbed", "N": sched.N, "amplitude": sched.amplitude}
    if sched.kind == "adaptive":
        return {"kind": "adaptive", "dt_min": sched.dt_min, "dt_max": sched.dt_max,
                "gamma_adp": sched.gamma_adp, "ratio_cap": sched.ratio_cap,
                "dt_init": sched.dt_init, "energy_source": sched.energy_source}
    return {"kind": "explicit", "dts": [float(d) for d in sched.dts]}


def to_dict(cfg: RunConfig) -> dict:
    """Fully resolved document (all defaults explicit)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "flow": cfg.flow,
        "eps2": cfg.eps2,
        "lambda": cfg.lam,
        "c0": cfg.c0,
        "sigma": cfg.sigma,
        "v_kind": cfg.v_kind,
        "grid": {"nx": cfg.nx, "ny": cfg.ny, "lx": cfg.lx, "ly": cfg.ly,
                 "dealias": cfg.dealias},
        "initial": {"kind": cfg.initial_kind, "lo": cfg.initial_lo,
                    "hi": cfg.initial_hi, "path": cfg.initial_path},
        "schedule": _schedule_dict(cfg.schedule),
        "T": cfg.T,
        "newton_iters": cfg.newton_iters,
        "seed": cfg.seed,
        "record_every": cfg.record_every,
        "snapshot_times": list(cfg.snapshot_times),
        "ratio_policy": cfg.ratio_policy,
        "first_step_cap": cfg.first_step_cap,
        "dt_ref": cfg.dt_ref,
    }


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return from_dict(doc)


def write_resolved_config(path, cfg: RunConfig) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
