"""Run-configuration parsing and validation.

A run is described by a single JSON document; unknown keys are rejected and
every diagnostic carries the offending field path.  The canonical form of a
spec (defaults applied, keys sorted) is what manifests embed, and
``parse_config(emit_config(spec))`` round-trips exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .lindblad import DomainChain

__all__ = [
    "ConfigError",
    "SimulationSpec",
    "SweepSpec",
    "parse_config",
    "parse_sweep_config",
    "spec_to_dict",
    "emit_config",
]

DEFAULT_MAX_STATE_ENTRIES = 1_000_000


class ConfigError(ValueError):
    """Configuration rejected; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SimulationSpec:
    """Fully validated description of one simulation run."""

    backend: str                                  # "exact" | "meanfield"
    chain: DomainChain
    excitations: tuple[int, ...] | None           # per-domain Dicke excitation counts
    relative_inversions: tuple[float, ...] | None  # per-domain x_i in [-1/2, 1/2]
    t_end: float
    sampling: str                                 # "linear" | "logarithmic"
    n_samples: int
    t_start: float
    rtol: float
    atol: float
    units: str                                    # "dimensionless" | "si"
    max_state_entries: int
    csv_name: str
    svg_name: str | None
    manifest_name: str

    def initial_relative_inversions(self) -> tuple[float, ...]:
        if self.relative_inversions is not None:
            return self.relative_inversions
        return tuple(n / size - 0.5 for n, size in zip(self.excitations, self.chain.sizes))


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter family of runs derived from a base spec."""

    parameter: str               # "N1" | "temperature"
    values: tuple[float, ...]
    base: SimulationSpec

    def member_specs(self) -> list["SimulationSpec"]:
        """Member specs in deterministic order (sorted by parameter value)."""
        return [_derive_member(self.base, self.parameter, v) for v in sorted(self.values)]


def _expect_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    return obj


def _reject_unknown(obj: dict, known, path):
    unknown = sorted(set(obj) - set(known))
    if unknown:
        raise ConfigError(path, f"unknown keys {unknown}; allowed keys are {sorted(known)}")


def _get_number(obj, key, path, default=None, minimum=None, strict_min=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}", "required field is missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}, got {v}")
    if strict_min is not None and v <= strict_min:
        raise ConfigError(f"{path}.{key}", f"must be > {strict_min}, got {v}")
    return v


def _get_number_list(obj, key, path, length=None, minimum=None, strict_min=None):
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "required field is missing")
    v = obj[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}.{key}", "expected a non-empty array of numbers")
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"{path}.{key}[{i}]", f"expected a finite number, got {x!r}")
        if minimum is not None and x < minimum:
            raise ConfigError(f"{path}.{key}[{i}]", f"must be >= {minimum}, got {x}")
        if strict_min is not None and x <= strict_min:
            raise ConfigError(f"{path}.{key}[{i}]", f"must be > {strict_min}, got {x}")
        out.append(float(x))
    if length is not None and len(out) != length:
        raise ConfigError(f"{path}.{key}", f"expected {length} entries, got {len(out)}")
    return out


def _parse_chain(obj, path, units) -> DomainChain:
    obj = _expect_mapping(obj, path)
    _reject_unknown(
        obj, {"sizes", "gammas", "omega0", "temperatures", "include_hamiltonian"}, path
    )
    sizes_raw = _get_number_list(obj, "sizes", path, strict_min=0)
    sizes = []
    for i, s in enumerate(sizes_raw):
        if s != int(s):
            raise ConfigError(f"{path}.sizes[{i}]", f"spin counts must be integers, got {s}")
        sizes.append(int(s))
    if len(sizes) < 2:
        raise ConfigError(f"{path}.sizes", "a chain needs at least two domains")
    gammas = _get_number_list(obj, "gammas", path, length=len(sizes) - 1, strict_min=0)
    omega0 = _get_number(obj, "omega0", path, default=1.0, strict_min=0)
    if "temperatures" in obj:
        temperatures = _get_number_list(
            obj, "temperatures", path, length=len(sizes) - 1, minimum=0
        )
    else:
        temperatures = [0.0] * (len(sizes) - 1)
    if any(t > 0 for t in temperatures) and units != "si":
        raise ConfigError(
            f"{path}.temperatures",
            "finite reservoir temperatures require \"units\": \"si\" "
            "(omega0 in rad/s, kelvin temperatures)",
        )
    include_h = obj.get("include_hamiltonian", False)
    if not isinstance(include_h, bool):
        raise ConfigError(f"{path}.include_hamiltonian", "expected true or false")
    try:
        return DomainChain(
            sizes=tuple(sizes),
            gammas=tuple(gammas),
            omega0=omega0,
            temperatures=tuple(temperatures),
            include_hamiltonian=include_h,
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_initial(obj, path, chain):
    obj = _expect_mapping(obj, path)
    _reject_unknown(obj, {"excitations", "relative_inversions"}, path)
    has_exc = "excitations" in obj
    has_rel = "relative_inversions" in obj
    if has_exc == has_rel:
        raise ConfigError(
            path, "give exactly one of \"excitations\" or \"relative_inversions\""
        )
    if has_exc:
        raw = _get_number_list(obj, "excitations", path, length=chain.n_domains, minimum=0)
        exc = []
        for i, (x, n) in enumerate(zip(raw, chain.sizes)):
            if x != int(x):
                raise ConfigError(
                    f"{path}.excitations[{i}]", f"must be an integer count, got {x}"
                )
            if x > n:
                raise ConfigError(
                    f"{path}.excitations[{i}]", f"exceeds domain size {n}"
                )
            exc.append(int(x))
        return tuple(exc), None
    rel = _get_number_list(
        obj, "relative_inversions", path, length=chain.n_domains
    )
    for i, x in enumerate(rel):
        if abs(x) > 0.5:
            raise ConfigError(
                f"{path}.relative_inversions[{i}]",
                f"must lie in [-1/2, 1/2], got {x}",
            )
    return None, tuple(rel)


def parse_config(text: str) -> SimulationSpec:
    """Parse and validate a simulation-spec JSON document.

    A manifest document (the run echo written next to results) is accepted
    too: its embedded ``spec`` object is extracted, so a manifest alone
    reproduces its run.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"not valid JSON: {exc}") from exc
    doc = _expect_mapping(doc, "$")
    if "spec" in doc:  # manifest wrapper
        doc = _expect_mapping(doc["spec"], "$.spec")
    return _parse_spec_dict(doc, "$")


def _parse_spec_dict(doc: dict, path: str) -> SimulationSpec:
    _reject_unknown(
        doc,
        {
            "backend", "chain", "initial", "time", "tolerances", "units",
            "max_state_entries", "output",
        },
        path,
    )
    backend = doc.get("backend", "exact")
    if backend not in ("exact", "meanfield"):
        raise ConfigError(f"{path}.backend", f"must be \"exact\" or \"meanfield\", got {backend!r}")
    units = doc.get("units", "dimensionless")
    if units not in ("dimensionless", "si"):
        raise ConfigError(f"{path}.units", f"must be \"dimensionless\" or \"si\", got {units!r}")

    if "chain" not in doc:
        raise ConfigError(f"{path}.chain", "required field is missing")
    chain = _parse_chain(doc["chain"], f"{path}.chain", units)

    if "initial" not in doc:
        raise ConfigError(f"{path}.initial", "required field is missing")
    excitations, rel_inv = _parse_initial(doc["initial"], f"{path}.initial", chain)

    time_obj = _expect_mapping(doc.get("time", {}), f"{path}.time")
    _reject_unknown(time_obj, {"t_end", "sampling", "n_samples", "t_start"}, f"{path}.time")
    t_end = _get_number(time_obj, "t_end", f"{path}.time", strict_min=0)
    sampling = time_obj.get("sampling", "logarithmic" if backend == "meanfield" else "linear")
    if sampling not in ("linear", "logarithmic"):
        raise ConfigError(
            f"{path}.time.sampling",
            f"must be \"linear\" or \"logarithmic\", got {sampling!r}",
        )
    n_samples = _get_number(time_obj, "n_samples", f"{path}.time", default=400.0, minimum=2)
    if n_samples != int(n_samples):
        raise ConfigError(f"{path}.time.n_samples", "must be an integer")
    n_samples = int(n_samples)
    if sampling == "logarithmic":
        default_start = min(1e-8 / chain.sizes[0], t_end / n_samples)
        t_start = _get_number(
            time_obj, "t_start", f"{path}.time", default=default_start, strict_min=0
        )
    else:
        t_start = _get_number(time_obj, "t_start", f"{path}.time", default=0.0, minimum=0)
    if t_start >= t_end:
        raise ConfigError(f"{path}.time.t_start", f"must be below t_end = {t_end}")

    tol_obj = _expect_mapping(doc.get("tolerances", {}), f"{path}.tolerances")
    _reject_unknown(tol_obj, {"rtol", "atol"}, f"{path}.tolerances")
    default_rtol = 1e-10 if backend == "meanfield" else 1e-8
    default_atol = 1e-8 if backend == "meanfield" else 1e-10
    rtol = _get_number(tol_obj, "rtol", f"{path}.tolerances", default=default_rtol, strict_min=0)
    atol = _get_number(tol_obj, "atol", f"{path}.tolerances", default=default_atol, strict_min=0)

    max_entries = _get_number(
        doc, "max_state_entries", path, default=float(DEFAULT_MAX_STATE_ENTRIES), strict_min=0
    )
    if max_entries != int(max_entries):
        raise ConfigError(f"{path}.max_state_entries", "must be an integer")
    max_entries = int(max_entries)

    out_obj = _expect_mapping(doc.get("output", {}), f"{path}.output")
    _reject_unknown(out_obj, {"csv", "svg", "manifest"}, f"{path}.output")
    csv_name = out_obj.get("csv", "trajectory.csv")
    svg_name = out_obj.get("svg", "trajectory.svg")
    manifest_name = out_obj.get("manifest", "manifest.json")
    for key, val in (("csv", csv_name), ("manifest", manifest_name)):
        if not isinstance(val, str) or not val:
            raise ConfigError(f"{path}.output.{key}", "expected a non-empty file name")
    if svg_name is not None and (not isinstance(svg_name, str) or not svg_name):
        raise ConfigError(f"{path}.output.svg", "expected a file name or null")

    # backend capacity rules
    if backend == "exact":
        if excitations is None:
            raise ConfigError(
                f"{path}.initial",
                "the exact backend needs integer \"excitations\" "
                "(relative inversions generally do not map to Dicke states)",
            )
        state_entries = chain.dim**2
        if state_entries > max_entries:
            raise ConfigError(
                f"{path}.chain.sizes",
                f"exact backend needs {state_entries} density-matrix entries, "
                f"above the cap {max_entries}; use the meanfield backend or "
                "raise max_state_entries",
            )
    else:
        if chain.n_domains not in (2, 3):
            raise ConfigError(
                f"{path}.chain.sizes",
                f"no closed mean-field system for {chain.n_domains} domains "
                "(supported: 2 or 3)",
            )
        g0 = chain.gammas[0]
        if any(abs(g - g0) > 1e-12 * abs(g0) for g in chain.gammas):
            raise ConfigError(
                f"{path}.chain.gammas", "mean-field mode requires one uniform rate"
            )
        if any(t > 0 for t in chain.temperatures):
            raise ConfigError(
                f"{path}.chain.temperatures",
                "mean-field mode supports zero-temperature reservoirs only",
            )

    return SimulationSpec(
        backend=backend,
        chain=chain,
        excitations=excitations,
        relative_inversions=rel_inv,
        t_end=t_end,
        sampling=sampling,
        n_samples=n_samples,
        t_start=t_start,
        rtol=rtol,
        atol=atol,
        units=units,
        max_state_entries=max_entries,
        csv_name=csv_name,
        svg_name=svg_name,
        manifest_name=manifest_name,
    )


def spec_to_dict(spec: SimulationSpec) -> dict:
    """Canonical dict form (all defaults explicit)."""
    initial = (
        {"excitations": list(spec.excitations)}
        if spec.excitations is not None
        else {"relative_inversions": list(spec.relative_inversions)}
    )
    return {
        "backend": spec.backend,
        "units": spec.units,
        "chain": {
            "sizes": list(spec.chain.sizes),
            "gammas": list(spec.chain.gammas),
            "omega0": spec.chain.omega0,
            "temperatures": list(spec.chain.temperatures),
            "include_hamiltonian": spec.chain.include_hamiltonian,
        },
        "initial": initial,
        "time": {
            "t_end": spec.t_end,
            "sampling": spec.sampling,
            "n_samples": spec.n_samples,
            "t_start": spec.t_start,
        },
        "tolerances": {"rtol": spec.rtol, "atol": spec.atol},
        "max_state_entries": spec.max_state_entries,
        "output": {
            "csv": spec.csv_name,
            "svg": spec.svg_name,
            "manifest": spec.manifest_name,
        },
    }


def emit_config(spec: SimulationSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n"


def _derive_member(base: SimulationSpec, parameter: str, value: float) -> SimulationSpec:
    doc = spec_to_dict(base)
    if parameter == "N1":
        if value <= 0 or value != int(value):
            raise ConfigError("$.values", f"N1 sweep values must be positive integers, got {value}")
        n1 = int(value)
        old_n1 = base.chain.sizes[0]
        doc["chain"]["sizes"][0] = n1
        if base.excitations is not None:
            # keep the excited fraction of the swept domain (exact for full
            # or zero excitation)
            frac = base.excitations[0] / old_n1
            doc["initial"]["excitations"][0] = int(round(frac * n1))
    elif parameter == "temperature":
        doc["chain"]["temperatures"] = [float(value)] * base.chain.n_reservoirs
    else:
        raise ConfigError("$.parameter", f"unknown sweep parameter {parameter!r}")
    return _parse_spec_dict(doc, "$")


def parse_sweep_config(text: str) -> SweepSpec:
    """Parse a sweep document: {"parameter", "values", "base": <spec>}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"not valid JSON: {exc}") from exc
    doc = _expect_mapping(doc, "$")
    _reject_unknown(doc, {"parameter", "values", "base"}, "$")
    for key in ("parameter", "values", "base"):
        if key not in doc:
            raise ConfigError(f"$.{key}", "required field is missing")
    parameter = doc["parameter"]
    if parameter not in ("N1", "temperature"):
        raise ConfigError("$.parameter", f"must be \"N1\" or \"temperature\", got {parameter!r}")
    values = doc["values"]
    if not isinstance(values, list) or not values:
        raise ConfigError("$.values", "expected a non-empty array of numbers")
    vals = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"$.values[{i}]", f"expected a finite number, got {v!r}")
        vals.append(float(v))
    if len(set(vals)) != len(vals):
        raise ConfigError("$.values", "sweep values must be distinct")
    base = _parse_spec_dict(_expect_mapping(doc["base"], "$.base"), "$.base")
    sweep = SweepSpec(parameter=parameter, values=tuple(vals), base=base)
    sweep.member_specs()  # validate every member now, not at run time
    return sweep
