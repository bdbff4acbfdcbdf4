"""Command-line experiment driver.

Every run is described by a JSON config (or a built-in recipe) and produces a
deterministic JSON result record: inputs echoed, outputs, and the outcome of
each declared tolerance check.  Exit status is 0 on success, 1 when a check
fails and 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import freeprob, permutations, spectra, traffic, wigner
from .entries import EntrySpec
from .errors import ConfigError, PermWignerError

log = logging.getLogger("permwigner")

EXPERIMENTS = ("perm_stats", "condition_report", "moment_mc", "moment_exact", "traffic_check", "spectrum", "nc_moment")
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2
_KNOWN_KEYS = {
    "experiment", "entries", "permutations", "word", "N", "N_list", "trials", "seed", "output", "check", "params",
}


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    experiment: str
    seed: int
    entries: dict = field(default_factory=lambda: {"kind": "gaussian", "beta": 0.0})
    permutations: dict = field(default_factory=dict)
    word: list | None = None
    N: int | None = None
    N_list: list[int] | None = None
    trials: int | None = None
    output: str | None = None
    check: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        self.permutations = {str(k): v for k, v in self.permutations.items()}
        if self.word is not None:
            self.word = [str(w) for w in self.word]
            missing = sorted(set(self.word) - set(self.permutations))
            if missing and self.experiment in ("moment_mc", "moment_exact"):
                raise ConfigError(f"word uses labels without a permutation: {missing}")
        for key, value in (("N", self.N), ("trials", self.trials)):
            if value is not None and (not isinstance(value, int) or value < 1):
                raise ConfigError(f"{key} must be a positive integer")
        if self.N is not None and self.N > wigner.MAX_N:
            raise ConfigError(f"N = {self.N} exceeds the cap {wigner.MAX_N}")
        if self.N_list is not None:
            if not self.N_list or any(not isinstance(n, int) or n < 1 or n > wigner.MAX_N for n in self.N_list):
                raise ConfigError(f"N_list must hold integers in [1, {wigner.MAX_N}]")
        self.entry_spec = EntrySpec.from_config(self.entries)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(data) - _KNOWN_KEYS
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment'")
        if "seed" not in data:
            raise ConfigError("config needs a 'seed'")
        return cls(**copy.deepcopy(data))

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "seed": self.seed, "entries": self.entries}
        for key in ("permutations", "word", "N", "N_list", "trials", "output", "check", "params"):
            value = getattr(self, key)
            if value not in (None, {}, []):
                out[key] = value
        return copy.deepcopy(out)

    def sizes(self) -> list[int]:
        if self.N_list is not None:
            return list(self.N_list)
        if self.N is None:
            raise ConfigError(f"{self.experiment} needs N or N_list")
        return [self.N]

    def single_n(self) -> int:
        if self.N is None:
            raise ConfigError(f"{self.experiment} needs N")
        return self.N


# -- permutation sections ---------------------------------------------------------------


def _perm_factory(label: str, section: dict, seed: int) -> Callable[[int], permutations.EntryPermutation]:
    if not isinstance(section, dict):
        raise ConfigError(f"permutation {label!r} must be an object")
    if "family" in section:
        fam = section["family"]
        if fam not in permutations.NAMED_FAMILIES:
            raise ConfigError(f"permutation {label!r}: unknown family {fam!r}")
        return permutations.named_factory(fam, section.get("param"))
    if "random" in section:
        sub = int(section["random"])

        def factory(n):
            rng = np.random.default_rng([seed, sub, n])
            return permutations.random_symmetric(n, rng)

        return factory
    if "table" in section:
        perm = permutations.read_table(section["table"])

        def from_file(n):
            if n != perm.n:
                raise ConfigError(f"table {section['table']!r} has N={perm.n}, config asks for N={n}")
            return perm

        return from_file
    raise ConfigError(f"permutation {label!r} needs 'family', 'random' or 'table'")


def _build_perms(cfg: ExperimentConfig, n: int) -> dict:
    return {lab: _perm_factory(lab, sec, cfg.seed)(n) for lab, sec in cfg.permutations.items()}


# -- JSON helpers ---------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return {"fraction": f"{x.numerator}/{x.denominator}", "value": float(x)}
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _parse_target(value):
    if isinstance(value, str) and "/" in value:
        return Fraction(value)
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    return value


def _check(name: str, value, target, tol: float, stderr: float | None = None, k: float = 0.0) -> dict:
    allowed = max(tol, k * stderr) if stderr is not None else tol
    if isinstance(value, Fraction) and isinstance(target, Fraction):
        err = abs(float(value - target))
    else:
        err = abs(complex(value) - complex(target))
    return {"name": name, "value": value, "target": target, "tolerance": allowed, "error": err, "passed": err <= allowed}


# -- experiments ----------------------------------------------------------------------


def run_perm_stats(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    rows = []
    for n in cfg.sizes():
        for lab, perm in _build_perms(cfg, n).items():
            s = permutations.stats(perm)
            rows.append(
                {
                    "label": lab, "N": n, "symmetric": perm.is_symmetric,
                    "fp_count": s.fp_count, "tp_count": s.tp_count, "grid_count": s.grid_count,
                    "fp_fraction": s.fp_fraction, "tp_fraction": s.tp_fraction, "grid_fraction": s.grid_fraction,
                    "fp_row_range": [s.fp_row_min, s.fp_row_max], "tp_row_range": [s.tp_row_min, s.tp_row_max],
                    "gamma_count": s.gamma_count, "chi_count": s.chi_count,
                }
            )
    return {"outputs": {"stats": rows}, "checks": []}


def run_condition_report(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    family = {lab: _perm_factory(lab, sec, cfg.seed) for lab, sec in cfg.permutations.items()}
    rep = permutations.condition_report(family, cfg.entry_spec.beta, cfg.sizes())
    rep.homogeneity_tol = cfg.check.get("homogeneity_tol", rep.homogeneity_tol)
    rep.grid_tol = cfg.check.get("grid_tol", rep.grid_tol)
    flags = [{"i": i, "i2": i2, **f} for (i, i2), f in rep.flags().items()]
    checks = []
    if cfg.check.get("require_off_grid"):
        checks = [
            {"name": f"off_grid {f['i']},{f['i2']}", "value": f["off_grid"], "target": True, "passed": f["off_grid"]}
            for f in flags
        ]
    return {"outputs": {"rows": rep.to_records(), "flags": flags}, "checks": checks}


def _moment_check(cfg: ExperimentConfig, value, stderr=None) -> list[dict]:
    if "target" not in cfg.check:
        return []
    return [
        _check(
            "moment", value, _parse_target(cfg.check["target"]), float(cfg.check.get("tol", 0.0)),
            stderr, float(cfg.check.get("stderr_factor", 0.0)),
        )
    ]


def run_moment_mc(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    if not cfg.word:
        raise ConfigError("moment_mc needs a word")
    n = cfg.single_n()
    trials = cfg.trials or 50
    perms = _build_perms(cfg, n)
    est, se = wigner.trace_moment_mc(cfg.entry_spec, perms, cfg.word, n, trials, cfg.seed)
    record = wigner.moment_record(cfg.word, n, trials, est, se, cfg.seed)
    if out_dir is not None:
        wigner.write_moment_records([record], out_dir / "moments.csv")
    return {"outputs": {"estimate": est, "stderr": se, "record": record}, "checks": _moment_check(cfg, est, se)}


def run_moment_exact(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    if not cfg.word:
        raise ConfigError("moment_exact needs a word")
    n = cfg.single_n()
    budget = int(cfg.params.get("budget", wigner.DEFAULT_MAP_BUDGET))
    value = wigner.trace_moment_exact(cfg.entry_spec, _build_perms(cfg, n), cfg.word, n, budget)
    return {"outputs": {"value": value}, "checks": _moment_check(cfg, value)}


_GRAPH_BUILDERS = {
    "two_vertex": lambda lab, p: traffic.two_vertex_graph(*lab, congruent=bool(p.get("congruent", False))),
    "path": lambda lab, p: traffic.path_graph(*lab, fork=bool(p.get("fork", False))),
    "star": lambda lab, p: traffic.star_graph(*lab),
    "cycle": lambda lab, p: traffic.cycle_graph(lab),
}


def _graph_from_params(params: dict) -> traffic.TestGraph:
    spec = params.get("graph")
    if isinstance(spec, str):
        return traffic.parse_graph(spec) if spec.lstrip().startswith("V") else traffic.read_graph(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind not in _GRAPH_BUILDERS:
            raise ConfigError(f"unknown graph kind {kind!r}; expected one of {sorted(_GRAPH_BUILDERS)}")
        labels = [str(x) for x in spec.get("labels", [])]
        return _GRAPH_BUILDERS[kind](labels, spec)
    raise ConfigError("traffic_check needs params.graph (text, path or {kind, labels})")


def _covariance_at(perms: dict, beta: complex) -> freeprob.CovarianceSpec:
    labels = list(perms)
    a = np.zeros((len(labels), len(labels)))
    b = np.zeros_like(a)
    for x, i in enumerate(labels):
        for y, i2 in enumerate(labels):
            s = permutations.stats(permutations.relative(perms[i], perms[i2]))
            a[x, y], b[x, y] = s.fp_fraction, s.tp_fraction
    if abs(beta.imag) > 1e-12:
        raise ConfigError("predicted values need a real beta")
    return freeprob.CovarianceSpec.from_ab((a + a.T) / 2, (b + b.T) / 2, beta.real, labels)


def run_traffic_check(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    graph = _graph_from_params(cfg.params)
    injective = bool(cfg.params.get("injective", True))
    budget = int(cfg.params.get("budget", wigner.DEFAULT_MAP_BUDGET))
    rows, checks = [], []
    for n in cfg.sizes():
        perms = _build_perms(cfg, n)
        value = traffic.expected_traffic_state(graph, cfg.entry_spec, perms, n, injective=injective, budget=budget)
        row = {"N": n, "value": value}
        if injective and cfg.entry_spec.beta.imag == 0:
            used = {lab: perms[lab] for lab in sorted(graph.labels)}
            row["predicted"] = traffic.predicted_injective(graph, _covariance_at(used, cfg.entry_spec.beta))
        rows.append(row)
    report = traffic.classify_double_tree(graph)
    if "tol" in cfg.check:
        tol = float(cfg.check["tol"])
        for row in rows:
            target = _parse_target(cfg.check["target"]) if "target" in cfg.check else row.get("predicted")
            if target is None:
                raise ConfigError("no target: give check.target or use an injective state with real beta")
            checks.append(_check(f"traffic N={row['N']}", row["value"], target, tol))
    outputs = {
        "graph": traffic.format_graph(graph),
        "double_tree": report.is_double_tree,
        "twin_classes": [[c.orientation, list(c.labels)] for c in report.twin_classes],
        "values": rows,
    }
    return {"outputs": outputs, "checks": checks}


def run_spectrum(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    n = cfg.single_n()
    perms = _build_perms(cfg, n)
    pair = [str(x) for x in cfg.params.get("pair", list(perms)[:2])]
    if len(pair) != 2 or any(p not in perms for p in pair):
        raise ConfigError("spectrum needs params.pair naming two permutations")
    w = wigner.sample_wigner(cfg.entry_spec, n, cfg.seed)
    a = wigner.permute_entries(w, perms[pair[0]]).entries
    b = wigner.permute_entries(w, perms[pair[1]]).entries
    sample = spectra.anticommutator_spectrum(a, b, beta=cfg.entry_spec.beta, pair=pair, seed=cfg.seed)
    ks = spectra.ks_distance(sample)
    bins = int(cfg.params.get("bins", 80))
    edges, counts = spectra.histogram(sample, bins, (-spectra.NU_SP_EDGE - 0.5, spectra.NU_SP_EDGE + 0.5))
    if out_dir is not None:
        centres = (edges[:-1] + edges[1:]) / 2
        spectra.write_two_column(out_dir / "histogram.csv", centres, counts, ("x", "density"))
        grid = np.linspace(-spectra.NU_SP_EDGE, spectra.NU_SP_EDGE, 801)
        spectra.write_two_column(out_dir / "nu_sp_density.csv", grid, spectra.nu_sp_density(grid), ("x", "density"))
        spectra.write_two_column(out_dir / "eigenvalues.csv", np.arange(n), sample.eigenvalues, ("index", "eigenvalue"))
    checks = []
    if "ks_max" in cfg.check:
        limit = float(cfg.check["ks_max"])
        checks.append({"name": "ks_distance", "value": ks, "target": 0.0, "tolerance": limit, "passed": ks <= limit})
    ev = sample.eigenvalues
    outputs = {"ks_distance": ks, "n": n, "pair": pair, "min": ev[0], "max": ev[-1], "second_moment": float(np.mean(ev**2))}
    return {"outputs": outputs, "checks": checks}


def run_nc_moment(cfg: ExperimentConfig, out_dir: Path | None) -> dict:
    mode = cfg.params.get("mode", "a1a2")
    word = cfg.word or []
    if mode == "a1a2":
        value = freeprob.a1a2_example_moment([int(w) for w in word])
    elif mode == "semicircular":
        k = cfg.params["K"]
        labels = [str(x) for x in cfg.params.get("labels", range(1, len(k) + 1))]
        value = freeprob.semicircular_moment(word, freeprob.CovarianceSpec(k, cfg.params.get("J"), labels))
    elif mode == "circular":
        kappa = freeprob.StarCovariance.free_family(circular=["c"])
        value = freeprob.star_nc2_moment([("c", w.endswith("*")) for w in word], kappa)
    else:
        raise ConfigError(f"unknown nc_moment mode {mode!r}")
    checks = []
    if "target" in cfg.check:
        checks.append(_check("nc_moment", value, _parse_target(cfg.check["target"]), float(cfg.check.get("tol", 0.0))))
    return {"outputs": {"value": value, "mode": mode}, "checks": checks}


RUNNERS = {
    "perm_stats": run_perm_stats,
    "condition_report": run_condition_report,
    "moment_mc": run_moment_mc,
    "moment_exact": run_moment_exact,
    "traffic_check": run_traffic_check,
    "spectrum": run_spectrum,
    "nc_moment": run_nc_moment,
}


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[dict, int]:
    """Run one experiment; return the result record and the exit status."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = RUNNERS[cfg.experiment](cfg, out)
    passed = all(c["passed"] for c in result["checks"])
    record = _jsonable({"config": cfg.to_dict(), **result, "status": "ok" if passed else "check_failed"})
    if out is not None:
        name = cfg.output or "result.json"
        (out / name).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return record, EXIT_OK if passed else EXIT_CHECK_FAILED


# -- recipes --------------------------------------------------------------------------

_ID = {"family": "identity"}


def _mc(word, perms, entries, target, tol, n=1000, trials=50, seed=20240101):
    return {
        "experiment": "moment_mc", "seed": seed, "entries": entries, "permutations": perms, "word": word,
        "N": n, "trials": trials, "check": {"target": target, "tol": tol, "stderr_factor": 3},
    }


def _spec_recipe(perms, entries, seed):
    return {
        "experiment": "spectrum", "seed": seed, "entries": entries, "permutations": perms, "N": 2000,
        "params": {"pair": ["1", "2"], "bins": 80}, "check": {"ks_max": 0.04},
    }


RECIPES: dict[str, tuple[str, dict]] = {
    "rho-fourth-moment": (
        "tr(W W^rho W W^rho) at beta = 1 against the limit 2(beta^2 + beta + 1)/3 = 2",
        _mc(["1", "2", "1", "2"], {"1": _ID, "2": {"family": "rho"}}, {"kind": "gaussian", "beta": 1.0}, 2.0, 0.03),
    ),
    "eta-fourth-moment": (
        "tr(W W^eta W W^eta) at beta = 1 against beta^2/3",
        _mc(["1", "2", "1", "2"], {"1": _ID, "2": {"family": "eta"}}, {"kind": "gaussian", "beta": 1.0}, 1 / 3, 0.02),
    ),
    "transpose-moments": (
        "tr(W W W^T W^T) at beta = i against 1 + 2|beta|^2/3 + Re(beta^2)/3 = 4/3",
        _mc(["1", "1", "2", "2"], {"1": _ID, "2": {"family": "transpose"}}, {"kind": "gaussian", "beta": [0.0, 1.0]}, 4 / 3, 0.03),
    ),
    "a1a2": (
        "(tr x phi)(A1 A1 A2 A2) for the 3x3 operator matrices: exactly 29/27",
        {"experiment": "nc_moment", "seed": 0, "word": [1, 1, 2, 2], "params": {"mode": "a1a2"}, "check": {"target": "29/27"}},
    ),
    "zeta-covariance": (
        "injective state of the opposing 2-vertex double tree for (identity, zeta_2) at beta = 1/2: a + b beta = 3/4",
        {
            "experiment": "traffic_check", "seed": 7, "entries": {"kind": "gaussian", "beta": 0.5},
            "permutations": {"1": _ID, "2": {"family": "zeta", "param": 2}}, "N": 500,
            "params": {"graph": {"kind": "two_vertex", "labels": ["1", "2"]}}, "check": {"target": 0.75, "tol": 0.05},
        },
    ),
    "spectrum-zeta": (
        "anticommutator of W and W^zeta_2 with beta = -1 (1/n + (n-1)beta/n = 0) against nu_SP",
        _spec_recipe({"1": _ID, "2": {"family": "zeta", "param": 2}}, {"kind": "gaussian", "beta": -1.0}, 11),
    ),
    "spectrum-zeta-3": (
        "anticommutator of W and W^zeta_3 with beta = -1/2 (1/n + (n-1)beta/n = 0) against nu_SP",
        _spec_recipe({"1": _ID, "2": {"family": "zeta", "param": 3}}, {"kind": "gaussian", "beta": -0.5}, 12),
    ),
    "spectrum-anti-transpose": (
        "anticommutator of a Rademacher W and its anti-transpose against nu_SP",
        _spec_recipe({"1": _ID, "2": {"family": "anti_transpose"}}, {"kind": "rademacher_real"}, 13),
    ),
    "rho-conditions": (
        "FP/TP homogeneity and grid fraction of rho relative to the identity",
        {
            "experiment": "condition_report", "seed": 0, "entries": {"kind": "gaussian", "beta": 0.0},
            "permutations": {"1": _ID, "2": {"family": "rho"}}, "N_list": [100, 200, 400],
            "check": {"require_off_grid": True},
        },
    ),
}


def list_recipes() -> dict[str, str]:
    return {name: desc for name, (desc, _) in RECIPES.items()}


def recipe_config(name: str) -> dict:
    if name not in RECIPES:
        raise ConfigError(f"unknown recipe {name!r}; see 'permwigner recipes'")
    return copy.deepcopy(RECIPES[name][1])


# -- entry point ----------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permwigner", description="Permuted Wigner matrix experiments.")
    p.add_argument("command", choices=EXPERIMENTS + ("run", "recipes"))
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--recipe", help="built-in recipe name")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=Path, help="directory for the result record and CSVs")
    p.add_argument("--show", action="store_true", help="with 'recipes --recipe NAME': print its config")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(args) -> ExperimentConfig:
    if (args.config is None) == (args.recipe is None):
        raise ConfigError("give exactly one of --config or --recipe")
    if args.recipe is not None:
        data = recipe_config(args.recipe)
    else:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        data["seed"] = args.seed
    if args.command != "run":
        if data.get("experiment", args.command) != args.command:
            raise ConfigError(f"config is a {data.get('experiment')!r} experiment, not {args.command!r}")
        data["experiment"] = args.command
    return ExperimentConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "recipes":
            if args.recipe:
                cfg = recipe_config(args.recipe)
                print(json.dumps(cfg, indent=2, sort_keys=True) if args.show else RECIPES[args.recipe][0])
            else:
                for name, desc in list_recipes().items():
                    print(f"{name:26s} {desc}")
            return EXIT_OK
        cfg = _load(args)
        record, status = run(cfg, args.out)
    except (PermWignerError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(record, indent=2, sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())
