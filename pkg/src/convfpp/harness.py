"""Sweep orchestration: grids, worker pool, CSV output.

A sweep is a cartesian grid of parameter cells for one registered
experiment.  Every cell is validated before any work starts, cells run
in a process pool, and rows are written in cell order regardless of
completion order, with a generated schema file next to each CSV.

Config files are flat key=value lines; a repeated key turns into a
grid axis.  Trial randomness is keyed by (master_seed, cell, trial)
through a dedicated cell-seed derivation, so no two cells share a
clock field.
"""

from __future__ import annotations

import concurrent.futures
import csv
import time
from dataclasses import dataclass, field as dc_field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import _fast, latticelab, ssplab, treelab
from .engine import Caps, Verdict, run_trial
from .field import RandomField
from .model import ClockMode, ConfigurationError, ModelParams, Topology, Truncation
from .stats import poisson_chernoff_bounds, wilson_interval

_RESERVED = ("experiment", "trials", "seed", "workers", "out",
             "caps.max_sites", "caps.max_events", "caps.horizon")


# ---------------------------------------------------------------------------
# seed derivation


def derive_cell_seed(master_seed: int, cell_index: int) -> int:
    """Per-cell master seed; distinct cells never share clock fields."""
    a = np.uint64((master_seed ^ 0x9E3779B97F4A7C15) & _fast.MASK64)
    b = np.uint64((cell_index + 1) * _fast.GOLD & _fast.MASK64)
    return int(_fast.mix64(np.uint64(_fast.mix64(a ^ b)) ^ np.uint64(_fast.TREE_TAG)))


def derive_trial_key(master_seed: int, cell_index: int, trial: int) -> int:
    """The 64-bit field base a trial would use; hashing these verifies
    collision freedom across (cell, trial)."""
    return int(_fast.field_base(np.uint64(derive_cell_seed(master_seed, cell_index)),
                                np.uint64(trial)))


# ---------------------------------------------------------------------------
# config files


def read_config(path: str) -> Dict[str, List[str]]:
    """Flat key=value lines; repeated keys accumulate into lists.
    Blank lines and # comments are ignored."""
    out: Dict[str, List[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out.setdefault(key.strip(), []).append(value.strip())
    return out


def parse_caps(spec: Optional[str], base: Optional[Caps] = None) -> Caps:
    """Parse 'max_sites=...,max_events=...,horizon=...' (any subset)."""
    caps = base if base is not None else Caps()
    if not spec:
        return caps
    updates: Dict[str, Any] = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ConfigurationError(f"bad caps entry {part!r}")
        key, value = part.split("=", 1)
        key = key.strip()
        if key == "horizon":
            updates[key] = float(value)
        elif key in ("max_sites", "max_events"):
            updates[key] = int(float(value))
        else:
            raise ConfigurationError(f"unknown cap {key!r}")
    return replace(caps, **updates)


# ---------------------------------------------------------------------------
# experiment registry


@dataclass(frozen=True)
class Param:
    name: str
    kind: type
    default: Any = None
    required: bool = False
    choices: Optional[Tuple[str, ...]] = None

    def convert(self, raw: str) -> Any:
        if self.kind is bool:
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ConfigurationError(f"{self.name}: bad boolean {raw!r}")
        try:
            value = self.kind(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{self.name}: {exc}") from exc
        if self.choices is not None and value not in self.choices:
            raise ConfigurationError(
                f"{self.name} must be one of {self.choices}, got {value!r}")
        return value


@dataclass(frozen=True)
class Experiment:
    name: str
    params: Tuple[Param, ...]
    columns: Tuple[str, ...]
    runner: Callable[..., Dict[str, Any]]
    validator: Optional[Callable[[Dict[str, Any]], None]] = None

    def param(self, name: str) -> Param:
        for p in self.params:
            if p.name == name:
                return p
        raise ConfigurationError(f"{self.name}: unknown parameter {name!r}")

    def build_cell(self, raw: Dict[str, str]) -> Dict[str, Any]:
        cell = {p.name: p.default for p in self.params}
        for key, value in raw.items():
            cell[key] = self.param(key).convert(value)
        for p in self.params:
            if p.required and cell[p.name] is None:
                raise ConfigurationError(f"{self.name}: parameter {p.name} is required")
        if self.validator is not None:
            self.validator(cell)
        return cell


def _model_from_cell(cell: Dict[str, Any]) -> ModelParams:
    trunc = None
    if cell.get("trunc_q") is not None:
        trunc = Truncation(q=cell["trunc_q"], K=cell["trunc_K"])
    return ModelParams(
        d=cell["d"], lam=cell["lam"], rho=cell["rho"],
        topology=Topology(cell.get("topology", "lattice")),
        clock_mode=ClockMode(cell.get("clock_mode", "static")),
        truncation=trunc)


def _iv_cols(prefix: str, iv) -> Dict[str, Any]:
    return {f"{prefix}_lo": iv.lower, f"{prefix}_hi": iv.upper}


def _run_survival(cell, trials, seed, caps) -> Dict[str, Any]:
    params = _model_from_cell(cell)
    counts = {Verdict.EXTINCT: 0, Verdict.SURVIVED: 0, Verdict.CAPPED: 0}
    for i in range(trials):
        out = run_trial(params, RandomField(params, seed, i), cell["target"], caps)
        counts[out.verdict] += 1
    res: Dict[str, Any] = {
        "extinct": counts[Verdict.EXTINCT],
        "survived": counts[Verdict.SURVIVED],
        "capped": counts[Verdict.CAPPED],
        "extinct_fraction": counts[Verdict.EXTINCT] / trials,
        "survived_fraction": counts[Verdict.SURVIVED] / trials,
        "capped_fraction": counts[Verdict.CAPPED] / trials,
    }
    res.update(_iv_cols("survived", wilson_interval(counts[Verdict.SURVIVED], trials)))
    res.update(_iv_cols("extinct", wilson_interval(counts[Verdict.EXTINCT], trials)))
    return res


def _validate_survival(cell) -> None:
    _model_from_cell(cell)
    if cell["target"] <= 0:
        raise ConfigurationError("target must be positive")


def _run_brw(cell, trials, seed, caps) -> Dict[str, Any]:
    st = treelab.brw_stats(cell["d"], cell["n"], trials, seed,
                           method=cell["method"], W=cell["W"])
    return {"mean_Mn": st.mean_Mn, "sd_Mn": st.sd_Mn, "ratio": st.ratio,
            "gamma_star": treelab.gamma_star(cell["d"])}


def _validate_brw(cell) -> None:
    if cell["d"] < 3:
        raise ConfigurationError("tree degree d must be >= 3")
    if cell["method"] == "exact" and cell["n"] > treelab.BRW_EXACT_MAX_N:
        raise ConfigurationError(
            f"exact method needs n <= {treelab.BRW_EXACT_MAX_N}")
    if cell["method"] == "cloud" and cell["W"] < 1000:
        raise ConfigurationError("beam width W must be at least 10^3")


def _run_subbox(cell, trials, seed, caps) -> Dict[str, Any]:
    res = treelab.estimate_subbox_good_prob(
        cell["k"], cell["epsilon"], cell["lam"], cell["d"], trials, seed)
    out = {"p_good": res.p_good, "mean_H1_count_capped": res.mean_H1_count_capped}
    out.update(_iv_cols("p_good", res.interval))
    return out


def _validate_subbox(cell) -> None:
    if cell["k"] > treelab.SUBBOX_MAX_K:
        raise ConfigurationError(f"k must be <= {treelab.SUBBOX_MAX_K}")
    if not (0 < cell["epsilon"] < 1):
        raise ConfigurationError("epsilon must be in (0, 1)")


def _run_highway(cell, trials, seed, caps) -> Dict[str, Any]:
    params = ModelParams(d=cell["d"], lam=cell["lam"], rho=0.0,
                         topology=Topology.TREE)
    need = cell["alpha"] ** cell["r"]
    counts = np.empty(trials)
    hits = 0
    for i in range(trials):
        field = RandomField(params, seed, i)
        counts[i] = treelab.highway_branching(
            cell["k"], cell["epsilon"], cell["lam"], cell["d"], cell["r"],
            cell["offspring_cap"], field)
        hits += counts[i] > need
    out = {"mean_count": float(counts.mean()), "max_count": float(counts.max()),
           "frac_above_alpha_r": hits / trials}
    out.update(_iv_cols("frac_above_alpha_r", wilson_interval(hits, trials)))
    return out


def _validate_highway(cell) -> None:
    if cell["r"] > treelab.HIGHWAY_MAX_R:
        raise ConfigurationError(f"r must be <= {treelab.HIGHWAY_MAX_R}")
    if cell["offspring_cap"] > treelab.HIGHWAY_MAX_CAP:
        raise ConfigurationError(
            f"offspring_cap must be <= {treelab.HIGHWAY_MAX_CAP}")
    if not (1.0 < cell["alpha"] < 2.0):
        raise ConfigurationError("alpha must be in (1, 2)")


def _run_spine(cell, trials, seed, caps) -> Dict[str, Any]:
    est = treelab.spine_probability(cell["k"], cell["epsilon"], cell["lam"],
                                    cell["d"], trials, master_seed=seed)
    return {"p_type1_part": est.p_type1_part if est.p_type1_part is not None else "",
            "p_type2_part": est.p_type2_part,
            "spine_edges": est.E,
            "p_spine": est.p_spine if est.p_spine is not None else ""}


def _validate_spine(cell) -> None:
    if cell["k"] > treelab.SPINE_MC_MAX_K:
        raise ConfigurationError(f"k must be <= {treelab.SPINE_MC_MAX_K}")


def _run_dstar(cell, trials, seed, caps) -> Dict[str, Any]:
    est = treelab.dstar_probability(cell["k"], cell["lam"], cell["d"], trials,
                                    master_seed=seed)
    out = {"successes": est.successes, "p": est.p}
    out.update(_iv_cols("p", est.interval))
    return out


def _validate_dstar(cell) -> None:
    if cell["k"] > treelab.DSTAR_MAX_K:
        raise ConfigurationError(f"k must be <= {treelab.DSTAR_MAX_K}")


def _run_goodbox(cell, trials, seed, caps) -> Dict[str, Any]:
    rep = treelab.good_box_probability(
        cell["k"], cell["r"], cell["epsilon"], cell["alpha"], cell["lam"],
        cell["rho"], trials, d=cell["d"], master_seed=seed,
        offspring_cap=cell["offspring_cap"])
    return {"p_g1": rep.p_g1, "p_g2_given_g1": rep.p_g2_given_g1,
            "p_g3": rep.p_g3, "p_g4": rep.p_g4, "p_good": rep.p_good,
            "box_size": rep.box_size}


def _validate_goodbox(cell) -> None:
    _validate_highway(cell)
    if cell["k"] > treelab.SPINE_MC_MAX_K:
        raise ConfigurationError(f"k must be <= {treelab.SPINE_MC_MAX_K}")


_SHAPE_COLS: Tuple[str, ...] = tuple(
    [f"tc_{lab}" for lab in latticelab._directions(2)[0]]
    + [f"r_{lab}" for lab in latticelab._directions(2)[0]]
    + ["hausdorff_drift"])


def _run_shape(cell, trials, seed, caps) -> Dict[str, Any]:
    est = latticelab.shape_estimate(cell["t"], cell["d"], trials, seed,
                                    rate=cell["rate"])
    out: Dict[str, Any] = {}
    for col in _SHAPE_COLS:
        out[col] = ""
    for lab, v in est.directional_times.items():
        out[f"tc_{lab}"] = v
    for lab, v in est.support_radii.items():
        out[f"r_{lab}"] = v
    out["hausdorff_drift"] = est.hausdorff_drift
    return out


def _validate_shape(cell) -> None:
    if cell["t"] <= 0 or cell["rate"] <= 0:
        raise ConfigurationError("t and rate must be positive")
    if cell["d"] < 2:
        raise ConfigurationError("shape estimation needs d >= 2")


def _run_closed(cell, trials, seed, caps) -> Dict[str, Any]:
    params = ModelParams(d=cell["d"], lam=1.0, rho=cell["rho"],
                         topology=Topology.LATTICE)
    dens = np.empty(trials)
    enc = 0
    origin_closed = 0
    for i in range(trials):
        cf = latticelab.closed_site_density(
            cell["rho"], cell["d"], cell["R"], RandomField(params, seed, i))
        dens[i] = cf.density
        res = latticelab.origin_encapsulated(cf)
        enc += res.encapsulated
        origin_closed += res.origin_closed
    out = {"density": float(dens.mean()),
           "expected_density": cell["rho"] / (cell["rho"] + 2 * cell["d"]),
           "encapsulated": enc, "origin_closed": origin_closed,
           "encapsulated_fraction": enc / trials}
    out.update(_iv_cols("encapsulated", wilson_interval(enc, trials)))
    return out


def _validate_closed(cell) -> None:
    if cell["rho"] < 0 or cell["R"] < 0:
        raise ConfigurationError("rho and R must be nonnegative")


def _ssp_params_from_cell(cell) -> ssplab.SspParams:
    return ssplab.SspParams(
        kappa=cell["kappa"],
        seed_source=ssplab.SeedSource(cell["seed_source"]),
        red_clock_source=ssplab.RedClockSource(cell["red_clock_source"]),
        p=cell.get("p"), C=cell.get("C"), lam=cell.get("lam"),
        rho=cell.get("rho"))


def _run_ssp(cell, trials, seed, caps) -> Dict[str, Any]:
    sparams = _ssp_params_from_cell(cell)
    base = ModelParams(d=cell["d"], lam=1.0, rho=0.0, topology=Topology.LATTICE)
    survived = reached = blue_boundary = origin_seed = 0
    done = 0
    i = 0
    while done < trials:
        state = ssplab.run_ssp(sparams, cell["R"], RandomField(base, seed, i))
        i += 1
        if state.origin_seed:
            origin_seed += 1
            continue
        done += 1
        survived += state.red_survival
        reached += state.red_reached_boundary
        blue_boundary += state.blue_touched_boundary
    out = {"red_survival": survived, "red_survival_fraction": survived / trials,
           "red_reached_boundary": reached, "blue_touched_boundary": blue_boundary,
           "origin_seed_trials": origin_seed}
    out.update(_iv_cols("red_survival", wilson_interval(survived, trials)))
    return out


def _validate_ssp(cell) -> None:
    _ssp_params_from_cell(cell)
    if cell["R"] <= 0:
        raise ConfigurationError("R must be positive")


def _run_seeds(cell, trials, seed, caps) -> Dict[str, Any]:
    params = ModelParams(d=cell["d"], lam=max(cell["lam"], 1e-300),
                         rho=cell["rho"], topology=Topology.LATTICE)
    dens = np.empty(trials)
    for i in range(trials):
        field = RandomField(params, seed, i)
        if cell["mode"] == "bernoulli":
            sf = ssplab.bernoulli_seeds(cell["p"], cell["R"], field)
        else:
            sf = ssplab.label_type2_seeds(cell["C"], cell["lam"], cell["rho"],
                                          cell["R"], field)
        dens[i] = sf.density
    expected = (cell["p"] if cell["mode"] == "bernoulli"
                else ssplab.seed_density(cell["C"], cell["lam"], cell["rho"],
                                         cell["d"]))
    return {"density": float(dens.mean()), "expected_density": expected}


def _validate_seeds(cell) -> None:
    if cell["mode"] == "bernoulli":
        if cell.get("p") is None or not (0.0 <= cell["p"] < 1.0):
            raise ConfigurationError("bernoulli mode needs p in [0, 1)")
    else:
        if cell.get("C") is None or cell["C"] <= 0:
            raise ConfigurationError("coupled mode needs C > 0")


def _run_bounds(cell, trials, seed, caps) -> Dict[str, Any]:
    mu, eps, C = cell["mu"], cell.get("epsilon"), cell.get("C")
    b = poisson_chernoff_bounds(mu, epsilon=eps, C=C)
    rng = np.random.default_rng(derive_cell_seed(seed, 0))
    samples = rng.poisson(mu, size=trials)
    out: Dict[str, Any] = {
        "lower_tail_bound": b.lower_tail if b.lower_tail is not None else "",
        "upper_tail_bound": b.upper_tail if b.upper_tail is not None else "",
        "large_dev_bound": b.large_dev if b.large_dev is not None else "",
        "empirical_lower": "", "empirical_upper": "", "empirical_large": ""}
    if eps is not None:
        out["empirical_lower"] = float((samples <= mu * (1 - eps)).mean())
        out["empirical_upper"] = float((samples >= mu * (1 + eps)).mean())
    if C is not None:
        out["empirical_large"] = float((samples >= C * mu).mean())
    return out


def _validate_bounds(cell) -> None:
    if cell["mu"] <= 0:
        raise ConfigurationError("mu must be positive")
    if cell.get("epsilon") is None and cell.get("C") is None:
        raise ConfigurationError("provide epsilon and/or C")
    if cell.get("epsilon") is not None and not (0 < cell["epsilon"] < 1):
        raise ConfigurationError("epsilon must be in (0, 1)")


EXPERIMENTS: Dict[str, Experiment] = {}


def _register(exp: Experiment) -> None:
    EXPERIMENTS[exp.name] = exp


_register(Experiment(
    "extinction",
    params=(Param("d", int, required=True), Param("lam", float, required=True),
            Param("rho", float, required=True), Param("target", int, required=True),
            Param("topology", str, default="lattice",
                  choices=("lattice", "tree")),
            Param("clock_mode", str, default="static",
                  choices=("static", "resample")),
            Param("trunc_q", float), Param("trunc_K", float)),
    columns=("extinct", "survived", "capped", "extinct_fraction",
             "survived_fraction", "capped_fraction", "survived_lo",
             "survived_hi", "extinct_lo", "extinct_hi"),
    runner=_run_survival, validator=_validate_survival))

_register(Experiment(
    "brw",
    params=(Param("d", int, required=True), Param("n", int, required=True),
            Param("method", str, default="exact", choices=("exact", "cloud")),
            Param("W", int, default=100_000)),
    columns=("mean_Mn", "sd_Mn", "ratio", "gamma_star"),
    runner=_run_brw, validator=_validate_brw))

_register(Experiment(
    "subbox",
    params=(Param("k", int, required=True), Param("epsilon", float, required=True),
            Param("lam", float, required=True), Param("d", int, default=3)),
    columns=("p_good", "p_good_lo", "p_good_hi", "mean_H1_count_capped"),
    runner=_run_subbox, validator=_validate_subbox))

_register(Experiment(
    "highway",
    params=(Param("k", int, required=True), Param("epsilon", float, required=True),
            Param("lam", float, required=True), Param("d", int, default=3),
            Param("r", int, required=True), Param("alpha", float, default=1.5),
            Param("offspring_cap", int, default=8)),
    columns=("mean_count", "max_count", "frac_above_alpha_r",
             "frac_above_alpha_r_lo", "frac_above_alpha_r_hi"),
    runner=_run_highway, validator=_validate_highway))

_register(Experiment(
    "spine",
    params=(Param("k", int, required=True), Param("epsilon", float, required=True),
            Param("lam", float, required=True), Param("d", int, default=3)),
    columns=("p_type1_part", "p_type2_part", "spine_edges", "p_spine"),
    runner=_run_spine, validator=_validate_spine))

_register(Experiment(
    "dstar",
    params=(Param("k", int, required=True), Param("lam", float, required=True),
            Param("d", int, default=3)),
    columns=("successes", "p", "p_lo", "p_hi"),
    runner=_run_dstar, validator=_validate_dstar))

_register(Experiment(
    "goodbox",
    params=(Param("k", int, required=True), Param("r", int, required=True),
            Param("epsilon", float, required=True),
            Param("alpha", float, default=1.5),
            Param("lam", float, required=True), Param("rho", float, required=True),
            Param("d", int, default=3), Param("offspring_cap", int, default=8)),
    columns=("p_g1", "p_g2_given_g1", "p_g3", "p_g4", "p_good", "box_size"),
    runner=_run_goodbox, validator=_validate_goodbox))

_register(Experiment(
    "shape",
    params=(Param("t", float, required=True), Param("d", int, default=2),
            Param("rate", float, default=1.0)),
    columns=_SHAPE_COLS,
    runner=_run_shape, validator=_validate_shape))

_register(Experiment(
    "closed",
    params=(Param("rho", float, required=True), Param("d", int, default=2),
            Param("R", int, required=True)),
    columns=("density", "expected_density", "encapsulated", "origin_closed",
             "encapsulated_fraction", "encapsulated_lo", "encapsulated_hi"),
    runner=_run_closed, validator=_validate_closed))

_register(Experiment(
    "ssp",
    params=(Param("kappa", float, required=True), Param("R", int, required=True),
            Param("d", int, default=2),
            Param("seed_source", str, default="bernoulli",
                  choices=("bernoulli", "coupled")),
            Param("red_clock_source", str, default="exp-capped",
                  choices=("exp-capped", "unit")),
            Param("p", float), Param("C", float), Param("lam", float),
            Param("rho", float)),
    columns=("red_survival", "red_survival_fraction", "red_survival_lo",
             "red_survival_hi", "red_reached_boundary",
             "blue_touched_boundary", "origin_seed_trials"),
    runner=_run_ssp, validator=_validate_ssp))

_register(Experiment(
    "seeds",
    params=(Param("mode", str, default="coupled",
                  choices=("bernoulli", "coupled")),
            Param("p", float), Param("C", float),
            Param("lam", float, default=0.0), Param("rho", float, default=0.0),
            Param("R", int, required=True), Param("d", int, default=2)),
    columns=("density", "expected_density"),
    runner=_run_seeds, validator=_validate_seeds))

_register(Experiment(
    "bounds",
    params=(Param("mu", float, required=True), Param("epsilon", float),
            Param("C", float)),
    columns=("lower_tail_bound", "upper_tail_bound", "large_dev_bound",
             "empirical_lower", "empirical_upper", "empirical_large"),
    runner=_run_bounds, validator=_validate_bounds))


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    experiment: str
    grid: Dict[str, List[str]]
    trials: int = 100
    master_seed: int = 0
    workers: int = 1
    caps: Caps = dc_field(default_factory=Caps)
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; "
                f"choices: {sorted(EXPERIMENTS)}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        for key, values in self.grid.items():
            EXPERIMENTS[self.experiment].param(key)
            if not values:
                raise ConfigurationError(f"empty grid axis {key!r}")


def sweep_from_config(cfg: Dict[str, List[str]], **overrides) -> SweepSpec:
    """Build a SweepSpec from parsed key=value lines; keyword overrides
    (CLI flags) win over file values."""
    def last(key, default=None):
        return cfg[key][-1] if key in cfg else default

    experiment = overrides.get("experiment") or last("experiment")
    if experiment is None:
        raise ConfigurationError("experiment is required")
    caps = Caps()
    caps_updates = {}
    for name in ("max_sites", "max_events"):
        v = last(f"caps.{name}")
        if v is not None:
            caps_updates[name] = int(float(v))
    v = last("caps.horizon")
    if v is not None:
        caps_updates["horizon"] = float(v)
    if caps_updates:
        caps = replace(caps, **caps_updates)
    if overrides.get("caps") is not None:
        caps = overrides["caps"]
    grid = {k: list(v) for k, v in cfg.items() if k not in _RESERVED}
    for key, values in (overrides.get("grid") or {}).items():
        grid[key] = list(values)
    trials = overrides.get("trials")
    seed = overrides.get("master_seed")
    workers = overrides.get("workers")
    out = overrides.get("out")
    return SweepSpec(
        experiment=experiment, grid=grid,
        trials=int(trials if trials is not None else last("trials", 100)),
        master_seed=int(seed if seed is not None else last("seed", 0)),
        workers=int(workers if workers is not None else last("workers", 1)),
        caps=caps,
        out=out if out is not None else last("out"))


def expand_cells(spec: SweepSpec) -> List[Dict[str, Any]]:
    """Cartesian product of the grid axes, every cell validated up
    front; axis order follows the experiment's parameter order."""
    exp = EXPERIMENTS[spec.experiment]
    axes = [(p.name, spec.grid[p.name]) for p in exp.params if p.name in spec.grid]
    cells_raw: List[Dict[str, str]] = [{}]
    for name, values in axes:
        cells_raw = [dict(c, **{name: v}) for c in cells_raw for v in values]
    return [exp.build_cell(raw) for raw in cells_raw]


def sweep_columns(experiment: str) -> List[str]:
    exp = EXPERIMENTS[experiment]
    return (["experiment", "cell", "status", "trials", "seed"]
            + [p.name for p in exp.params]
            + list(exp.columns) + ["wall_time_s"])


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def _execute_cell(experiment: str, cell: Dict[str, Any], trials: int,
                  master_seed: int, cell_index: int, caps: Caps,
                  ) -> Tuple[int, str, Dict[str, Any], float]:
    exp = EXPERIMENTS[experiment]
    seed = derive_cell_seed(master_seed, cell_index)
    t0 = time.perf_counter()
    try:
        result = exp.runner(cell, trials, seed, caps)
        status = "ok"
    except Exception as exc:  # worker panic: mark the cell, keep sweeping
        result = {"error": f"{type(exc).__name__}: {exc}"}
        status = "failed"
    return cell_index, status, result, time.perf_counter() - t0


@dataclass
class SweepResult:
    spec: SweepSpec
    columns: List[str]
    rows: List[Dict[str, Any]]
    failed_cells: List[int]

    @property
    def ok(self) -> bool:
        return not self.failed_cells


def write_schema(path: str, experiment: str) -> None:
    """Column listing for a sweep CSV, written next to the output."""
    exp = EXPERIMENTS[experiment]
    lines = [f"# column schema for experiment '{experiment}'"]
    fixed = {"experiment": "experiment name",
             "cell": "cell index in grid order",
             "status": "ok or failed",
             "trials": "trials per cell",
             "seed": "derived per-cell seed",
             "wall_time_s": "cell wall time in seconds"}
    for col in sweep_columns(experiment):
        if col in fixed:
            desc = fixed[col]
        elif any(p.name == col for p in exp.params):
            desc = "parameter"
        else:
            desc = "result"
        lines.append(f"{col}\t{desc}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Execute every cell and return (and optionally write) the rows.

    Cells are validated before any work; execution order is arbitrary
    across workers but rows are emitted sorted by cell index, flushed
    incrementally so an interrupted sweep leaves a parseable prefix."""
    cells = expand_cells(spec)
    if not cells:
        raise ConfigurationError("sweep grid is empty")
    columns = sweep_columns(spec.experiment)
    rows: List[Dict[str, Any]] = []
    failed: List[int] = []
    writer = None
    fh = None
    if spec.out:
        fh = open(spec.out, "w", encoding="utf-8", newline="")
        writer = csv.writer(fh)
        writer.writerow(columns)
        fh.flush()
        write_schema(spec.out + ".schema", spec.experiment)

    def emit(idx: int, status: str, result: Dict[str, Any], wall: float) -> None:
        row: Dict[str, Any] = {
            "experiment": spec.experiment, "cell": idx, "status": status,
            "trials": spec.trials,
            "seed": derive_cell_seed(spec.master_seed, idx)}
        row.update(cells[idx])
        if status == "ok":
            row.update(result)
        else:
            failed.append(idx)
        row["wall_time_s"] = wall
        rows.append(row)
        if writer is not None:
            writer.writerow([_fmt(row.get(c)) for c in columns])
            fh.flush()

    try:
        if spec.workers == 1:
            for idx, cell in enumerate(cells):
                emit(*_execute_cell(spec.experiment, cell, spec.trials,
                                    spec.master_seed, idx, spec.caps))
        else:
            pending: Dict[int, Tuple[str, Dict[str, Any], float]] = {}
            next_idx = 0
            with concurrent.futures.ProcessPoolExecutor(spec.workers) as pool:
                futures = [pool.submit(_execute_cell, spec.experiment, cell,
                                       spec.trials, spec.master_seed, idx,
                                       spec.caps)
                           for idx, cell in enumerate(cells)]
                for fut in concurrent.futures.as_completed(futures):
                    idx, status, result, wall = fut.result()
                    pending[idx] = (status, result, wall)
                    while next_idx in pending:
                        emit(next_idx, *pending.pop(next_idx))
                        next_idx += 1
    finally:
        if fh is not None:
            fh.close()
    return SweepResult(spec=spec, columns=columns, rows=rows,
                       failed_cells=sorted(failed))
