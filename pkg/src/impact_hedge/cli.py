"""Command-line front end: config parsing, scenario runs, CSV emission.

Scenario files are YAML.  One annotated example per subcommand lives in
configs/.  All validation errors are collected (with field paths) before
the run is rejected, so a broken file is fixed in one pass.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy
import yaml

from . import __version__
from .closed_form import PutBlockSpec, QuadratureError, replication_cost, shock_offset
from .esscher import (
    MeasureSpec,
    MomentScreenError,
    atoms,
    density,
    monotonicity_scan,
    tail_limit_check,
    export_tilt_csv,
)
from .model import (
    Affine,
    Call,
    CoefficientSpec,
    DriverSpec,
    FactorModel,
    GoodDealDriver,
    InvalidSpecError,
    LinearDriver,
    LogCoshPut,
    PayoffSpec,
    Put,
    QuadraticDriver,
    TablePayoff,
    ZeroDriver,
    eval_payoff,
)
from .pde import PdeFailure, SpaceTimeGrid, build_family, export_family_csv
from .quotes import QuoteContext, QuoteUnavailableError, export_curve_csv, price_curve
from .simulate import (
    SaturationError,
    export_paths_csv,
    export_pnl_csv,
    hedge_plan,
    replication_test,
    simulate_paths,
)

SUBCOMMANDS = ("quote", "surface", "hedge", "simulate", "burgers", "esscher", "verify")
OUT_ENV_VAR = "IMPACT_HEDGE_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_NUMERICAL_ERRORS = (
    PdeFailure,
    QuadratureError,
    SaturationError,
    MomentScreenError,
    QuoteUnavailableError,
)


class ConfigError(ValueError):
    """All validation problems for one file, each tagged with a field path."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ---------------------------------------------------------------------------
# validation helpers


class _Check:
    def __init__(self):
        self.errors = []

    def fail(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def block(self, parent: dict, path: str, required: bool = True):
        name = path.rsplit(".", 1)[-1]
        val = parent.get(name)
        if val is None:
            if required:
                self.fail(path, "missing block")
            return None
        if not isinstance(val, dict):
            self.fail(path, "expected a mapping")
            return None
        return val

    def num(self, block: dict, path: str, default=None, finite: bool = True):
        name = path.rsplit(".", 1)[-1]
        val = block.get(name, default)
        if val is None:
            self.fail(path, "missing numeric field")
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(path, f"expected a number, got {type(val).__name__}")
            return None
        if finite and not np.isfinite(val):
            self.fail(path, "must be finite")
            return None
        return float(val)

    def integer(self, block: dict, path: str, default=None, minimum: int = None):
        name = path.rsplit(".", 1)[-1]
        val = block.get(name, default)
        if val is None:
            self.fail(path, "missing integer field")
            return None
        if isinstance(val, bool) or not isinstance(val, int):
            self.fail(path, f"expected an integer, got {type(val).__name__}")
            return None
        if minimum is not None and val < minimum:
            self.fail(path, f"must be >= {minimum}")
            return None
        return int(val)


def _parse_coefficient(ck: _Check, block, path: str) -> Optional[CoefficientSpec]:
    if isinstance(block, (int, float)) and not isinstance(block, bool):
        return CoefficientSpec("constant", (float(block),))
    if not isinstance(block, dict):
        ck.fail(path, "expected a number or a mapping with a 'kind'")
        return None
    kind = block.get("kind")
    try:
        if kind == "constant":
            v = ck.num(block, f"{path}.value")
            return None if v is None else CoefficientSpec("constant", (v,))
        if kind == "affine":
            a0 = ck.num(block, f"{path}.a0")
            a1 = ck.num(block, f"{path}.a1")
            if a0 is None or a1 is None:
                return None
            return CoefficientSpec("affine", (a0, a1))
        if kind == "time_table":
            t = block.get("t")
            v = block.get("values")
            return CoefficientSpec("time_table", (np.asarray(t, float), np.asarray(v, float)))
        if kind == "xt_table":
            return CoefficientSpec(
                "xt_table",
                (
                    np.asarray(block.get("x"), float),
                    np.asarray(block.get("t"), float),
                    np.asarray(block.get("values"), float),
                ),
            )
    except (InvalidSpecError, TypeError, ValueError) as exc:
        ck.fail(path, str(exc))
        return None
    ck.fail(f"{path}.kind", f"unknown coefficient kind {kind!r}")
    return None


def _parse_payoff(ck: _Check, block, path: str) -> Optional[PayoffSpec]:
    if not isinstance(block, dict):
        ck.fail(path, "expected a mapping with a 'kind'")
        return None
    kind = block.get("kind")
    scale = ck.num(block, f"{path}.scale", default=1.0)
    if scale is None:
        return None
    try:
        if kind == "affine":
            a0 = ck.num(block, f"{path}.a0")
            a1 = ck.num(block, f"{path}.a1")
            if a0 is None or a1 is None:
                return None
            return Affine(a0, a1, scale)
        if kind == "call":
            k = ck.num(block, f"{path}.k")
            return None if k is None else Call(k, scale)
        if kind == "put":
            k = ck.num(block, f"{path}.k")
            return None if k is None else Put(k, scale)
        if kind == "logcosh_put":
            lam = ck.num(block, f"{path}.lam")
            gamma = ck.num(block, f"{path}.gamma")
            k = ck.num(block, f"{path}.k")
            if None in (lam, gamma, k):
                return None
            return LogCoshPut(lam, gamma, k, scale)
        if kind == "table":
            return TablePayoff(tuple(block.get("x", ())), tuple(block.get("values", ())), scale)
    except (InvalidSpecError, TypeError, ValueError) as exc:
        ck.fail(path, str(exc))
        return None
    ck.fail(f"{path}.kind", f"unknown payoff kind {kind!r}")
    return None


def _parse_driver(ck: _Check, block: dict) -> Optional[DriverSpec]:
    kind = block.get("kind")
    if kind == "zero":
        return ZeroDriver()
    if kind == "linear":
        G = _parse_coefficient(ck, block.get("G", 0.0), "driver.G")
        return None if G is None else LinearDriver(G)
    if kind == "quadratic":
        gamma = ck.num(block, "driver.gamma")
        if gamma is None:
            return None
        if not gamma > 0:
            ck.fail("driver.gamma", "must be positive for the quadratic driver")
            return None
        beta = _parse_coefficient(ck, block.get("beta", 0.0), "driver.beta")
        return None if beta is None else QuadraticDriver(gamma, beta)
    if kind == "good_deal":
        Lambda = ck.num(block, "driver.Lambda")
        try:
            A = np.asarray(block.get("A"), dtype=float)
            b = np.asarray(block.get("b"), dtype=float)
        except (TypeError, ValueError) as exc:
            ck.fail("driver.A", str(exc))
            return None
        if Lambda is None:
            return None
        try:
            return GoodDealDriver(A, b, Lambda)
        except InvalidSpecError as exc:
            ck.fail("driver", str(exc))
            return None
    ck.fail("driver.kind", f"unknown driver kind {kind!r}")
    return None


def _parse_measure(ck: _Check, block: dict, path: str) -> Optional[MeasureSpec]:
    kind = block.get("kind")
    try:
        if kind == "atoms":
            return atoms(block.get("points", ()), block.get("weights", ()))
        if kind == "uniform":
            lo = ck.num(block, f"{path}.lower")
            hi = ck.num(block, f"{path}.upper")
            n = ck.integer(block, f"{path}.n", default=2001, minimum=2)
            if None in (lo, hi, n) or not lo < hi:
                ck.fail(path, "needs lower < upper")
                return None
            x = np.linspace(lo, hi, n)
            return density(x, np.ones_like(x) / (hi - lo), lo, hi)
        if kind == "density":
            return density(block.get("x", ()), block.get("values", ()),
                           block.get("lower"), block.get("upper"))
    except (ValueError, TypeError) as exc:
        ck.fail(path, str(exc))
        return None
    ck.fail(f"{path}.kind", f"unknown measure kind {kind!r}")
    return None


# ---------------------------------------------------------------------------
# scenario config


@dataclass
class ScenarioConfig:
    """Validated, normalized scenario: parse -> serialize -> parse is a fixed point."""

    raw: dict
    model: FactorModel
    driver: DriverSpec
    h_M: PayoffSpec
    s: PayoffSpec
    h_L: Optional[PayoffSpec]
    grid: SpaceTimeGrid
    y_grid: np.ndarray
    n_paths: int
    n_steps: int
    seed: int
    out_dir: str
    precision: int
    quote_z: float
    put_block: Optional[PutBlockSpec] = None
    esscher: Optional[dict] = None

    @property
    def digest(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()


def serialize_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.raw, sort_keys=True, default_flow_style=False)


def _normalize(data: dict, out_dir: str, precision: int, seed: int) -> dict:
    raw = json.loads(json.dumps(data, sort_keys=True))
    raw.setdefault("output", {})
    raw["output"]["directory"] = out_dir
    raw["output"]["precision"] = precision
    raw.setdefault("simulation", {})
    raw["simulation"].setdefault("n_paths", 100)
    raw["simulation"].setdefault("n_steps", 100)
    raw["simulation"]["seed"] = seed
    return raw


def parse_config(path: str) -> ScenarioConfig:
    """Load and validate a scenario file; raises ConfigError with every problem."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return parse_config_data(data)


def parse_config_data(data) -> ScenarioConfig:
    ck = _Check()
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a mapping"])

    model_block = ck.block(data, "model", required=False)
    model = None
    if model_block is not None:
        f0 = ck.num(model_block, "model.f0")
        horizon = ck.num(model_block, "model.horizon")
        drift = _parse_coefficient(ck, model_block.get("drift", 0.0), "model.drift")
        vol = _parse_coefficient(ck, model_block.get("vol", 1.0), "model.vol")
        if horizon is not None and horizon <= 0:
            ck.fail("model.horizon", "must be positive")
        elif None not in (f0, horizon, drift, vol):
            model = FactorModel(f0, drift, vol, horizon)

    driver_block = ck.block(data, "driver", required=False)
    driver = _parse_driver(ck, driver_block) if driver_block is not None else None

    payoffs = ck.block(data, "payoffs", required=False)
    h_M = s = h_L = None
    if payoffs is not None:
        h_M = _parse_payoff(ck, payoffs.get("h_M", {"kind": "affine", "a0": 0.0, "a1": 0.0}),
                            "payoffs.h_M")
        s = _parse_payoff(ck, payoffs.get("s", {"kind": "affine", "a0": 0.0, "a1": 1.0}),
                          "payoffs.s")
        if "h_L" in payoffs:
            h_L = _parse_payoff(ck, payoffs["h_L"], "payoffs.h_L")

    grids = ck.block(data, "grids", required=False)
    grid = None
    y_grid = None
    if grids is not None and model is not None:
        space = ck.block(grids, "grids.space")
        if space is not None:
            x_min = ck.num(space, "grids.space.x_min")
            x_max = ck.num(space, "grids.space.x_max")
            nx = ck.integer(space, "grids.space.nx", minimum=5)
            nt = ck.integer(space, "grids.space.nt", minimum=1)
            if None not in (x_min, x_max, nx, nt):
                if x_min >= x_max:
                    ck.fail("grids.space.x_min", "must be below x_max")
                else:
                    grid = SpaceTimeGrid(x_min, x_max, nx, nt, model.horizon)
        volume = ck.block(grids, "grids.volume")
        if volume is not None:
            if "values" in volume:
                y_grid = np.asarray(volume["values"], dtype=float)
                if y_grid.ndim != 1 or y_grid.size < 2 or np.any(np.diff(y_grid) <= 0):
                    ck.fail("grids.volume.values", "must be strictly increasing, >= 2 entries")
                    y_grid = None
            else:
                y_min = ck.num(volume, "grids.volume.y_min")
                y_max = ck.num(volume, "grids.volume.y_max")
                n = ck.integer(volume, "grids.volume.n", minimum=2)
                if None not in (y_min, y_max, n):
                    if y_min >= y_max:
                        ck.fail("grids.volume.y_min", "must be below y_max")
                    else:
                        y_grid = np.linspace(y_min, y_max, n)

    sim = data.get("simulation", {})
    if not isinstance(sim, dict):
        ck.fail("simulation", "expected a mapping")
        sim = {}
    n_paths = ck.integer(sim, "simulation.n_paths", default=100, minimum=1)
    n_steps = ck.integer(sim, "simulation.n_steps", default=100, minimum=1)
    seed = ck.integer(sim, "simulation.seed", default=0, minimum=0)

    out = data.get("output", {})
    if not isinstance(out, dict):
        ck.fail("output", "expected a mapping")
        out = {}
    out_dir = out.get("directory", os.environ.get(OUT_ENV_VAR, "out"))
    if not isinstance(out_dir, str):
        ck.fail("output.directory", "expected a string")
        out_dir = "out"
    precision = ck.integer(out, "output.precision", default=17, minimum=1)

    quote_block = data.get("quote", {})
    quote_z = 0.0
    if isinstance(quote_block, dict):
        quote_z = ck.num(quote_block, "quote.z", default=0.0) or 0.0
    else:
        ck.fail("quote", "expected a mapping")

    put_block = None
    if "put_block" in data:
        pb = ck.block(data, "put_block")
        if pb is not None:
            lam = ck.num(pb, "put_block.lam")
            gamma = ck.num(pb, "put_block.gamma")
            b = ck.num(pb, "put_block.b", default=0.0)
            c = ck.num(pb, "put_block.c", default=1.0)
            K = ck.num(pb, "put_block.K")
            T = ck.num(pb, "put_block.T", default=model.horizon if model else None)
            if None not in (lam, gamma, b, c, K, T):
                try:
                    put_block = PutBlockSpec(lam=lam, gamma=gamma, b=b, c=c, K=K, T=T)
                except (InvalidSpecError, ValueError) as exc:
                    ck.fail("put_block", str(exc))

    esscher_cfg = None
    if "esscher" in data:
        eb = ck.block(data, "esscher")
        if eb is not None:
            measure = _parse_measure(ck, eb.get("measure", {}), "esscher.measure")
            objective = _parse_payoff(
                ck, eb.get("objective", {"kind": "affine", "a0": 0.0, "a1": 1.0}),
                "esscher.objective")
            yb = ck.block(eb, "esscher.y_grid")
            ys = None
            if yb is not None:
                y_lo = ck.num(yb, "esscher.y_grid.min")
                y_hi = ck.num(yb, "esscher.y_grid.max")
                y_n = ck.integer(yb, "esscher.y_grid.n", default=81, minimum=2)
                if None not in (y_lo, y_hi, y_n) and y_lo < y_hi:
                    ys = np.linspace(y_lo, y_hi, y_n)
            tail_y = ck.num(eb, "esscher.tail_y", default=40.0)
            if measure is not None and objective is not None and ys is not None:
                esscher_cfg = {"measure": measure, "objective": objective,
                               "y_grid": ys, "tail_y": tail_y}

    if ck.errors:
        raise ConfigError(ck.errors)

    raw = _normalize(data, out_dir, precision, seed)
    return ScenarioConfig(
        raw=raw, model=model, driver=driver, h_M=h_M, s=s, h_L=h_L,
        grid=grid, y_grid=y_grid, n_paths=n_paths, n_steps=n_steps, seed=seed,
        out_dir=out_dir, precision=precision, quote_z=quote_z,
        put_block=put_block, esscher=esscher_cfg,
    )


# ---------------------------------------------------------------------------
# scenario runs


@dataclass
class RunReport:
    subcommand: str
    input_digest: str
    metrics: dict = field(default_factory=dict)
    exit_status: int = EXIT_OK


def _require(config: ScenarioConfig, subcommand: str, *names) -> None:
    missing = [n for n in names if getattr(config, n) is None]
    if missing:
        raise ConfigError([f"{n}: block required by `{subcommand}`" for n in missing])


def _family(config: ScenarioConfig):
    return build_family(config.model, config.driver, config.h_M, config.s,
                        config.y_grid, config.grid)


def run_scenario(config: ScenarioConfig, subcommand: str):
    """Execute one subcommand; returns (RunReport, artifacts for emission)."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError([f"subcommand: unknown `{subcommand}`"])
    report = RunReport(subcommand=subcommand, input_digest=config.digest)
    artifacts = {}

    if subcommand == "quote":
        _require(config, subcommand, "model", "driver", "h_M", "s", "grid", "y_grid")
        family = _family(config)
        ctx = QuoteContext(family, config.model.f0, 0.0)
        curve = price_curve(ctx, config.quote_z, config.y_grid)
        artifacts["curve"] = curve
        report.metrics = {
            "z": config.quote_z,
            "y_max": float(config.y_grid[-1]),
            "price_at_y_max": float(curve.prices[-1]),
        }

    elif subcommand == "surface":
        _require(config, subcommand, "model", "driver", "h_M", "s", "grid", "y_grid")
        family = _family(config)
        artifacts["family"] = family
        report.metrics = {
            "p00": family.p_at(config.model.f0, 0.0, 0.0),
            "z_monotonicity_gap": family.z_monotonicity_gap(),
        }

    elif subcommand in ("hedge", "simulate"):
        _require(config, subcommand, "model", "driver", "h_M", "s", "h_L",
                 "grid", "y_grid")
        family = _family(config)
        plan = hedge_plan(config.model, config.driver, config.h_M, config.h_L,
                          config.s, family, config.grid)
        artifacts["family"] = family
        artifacts["plan"] = plan
        report.metrics = {
            "initial_cost": plan.initial_cost,
            "saturation_fraction": plan.saturation_fraction,
        }
        if subcommand == "simulate":
            ensemble = simulate_paths(config.model, config.n_steps,
                                      config.n_paths, config.seed)
            residual = replication_test(plan, ensemble, family, config.h_L, config.s)
            positions = plan.position_at(
                family, ensemble.factor[:, :-1], ensemble.times[None, :-1])
            artifacts["ensemble"] = ensemble
            artifacts["positions"] = positions
            artifacts["residual"] = residual
            report.metrics.update({
                "residual_rms": residual.rms,
                "residual_mean": residual.mean,
                "n_clipped_paths": residual.n_clipped_paths,
            })

    elif subcommand == "burgers":
        if config.put_block is None:
            raise ConfigError(["put_block: block required by `burgers`"])
        pb = config.put_block
        exact, approx = replication_cost(pb)
        artifacts["put_block"] = pb
        report.metrics = {
            "cost_exact": exact,
            "cost_approx": approx,
            "shock_offset": shock_offset(pb.lam, pb.gamma, pb.b, pb.K, pb.c, pb.T),
        }

    elif subcommand == "esscher":
        if config.esscher is None:
            raise ConfigError(["esscher: block required by `esscher`"])
        eb = config.esscher
        scan = monotonicity_scan(eb["measure"], eb["objective"], eb["y_grid"])
        tails = tail_limit_check(eb["measure"], eb["objective"], eb["tail_y"])
        artifacts["tilt"] = scan
        report.metrics = {
            "monotone": scan.monotone,
            "lower_gap": tails.lower_gap,
            "upper_gap": tails.upper_gap,
        }

    elif subcommand == "verify":
        from .acceptance import run_battery

        results = run_battery()
        artifacts["battery"] = results
        n_pass = sum(1 for r in results if r.passed)
        report.metrics = {"n_pass": n_pass, "n_fail": len(results) - n_pass}
        if n_pass < len(results):
            report.exit_status = EXIT_NUMERICAL

    return report, artifacts


def emit_outputs(report: RunReport, artifacts: dict, out_dir: str) -> list:
    """Write the per-subcommand CSVs and the run manifest; returns the paths.

    The manifest records the config digest and library versions only, so a
    rerun with the same config yields a byte-identical output tree.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    if "curve" in artifacts:
        export_curve_csv(artifacts["curve"], _path("curve.csv"))
    if "family" in artifacts:
        export_family_csv(artifacts["family"], _path("surface.csv"))
    if "plan" in artifacts:
        plan = artifacts["plan"]
        grid = plan.value_surface.grid
        with open(_path("hedge.csv"), "w") as fh:
            fh.write("x,t,value,z_star,position\n")
            for n, t in enumerate(grid.times):
                for i, x in enumerate(grid.x):
                    fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                        x, t, plan.value_surface.values[i, n],
                        plan.z_star[i, n], plan.strategy_field[i, n]))
    if "ensemble" in artifacts:
        export_paths_csv(artifacts["ensemble"], artifacts.get("positions"),
                         None, _path("paths.csv"))
        export_pnl_csv(artifacts["residual"], _path("pnl.csv"),
                       residuals=artifacts["residual"].per_path)
    if "put_block" in artifacts:
        pb = artifacts["put_block"]
        from .closed_form import burgers_scaled, logcosh_hedge_field

        xs = np.linspace(pb.K - pb.b - 10.0, pb.K - pb.b + 10.0, 201)
        delta = shock_offset(pb.lam, pb.gamma, pb.b, pb.K, pb.c, pb.T)
        with open(_path("burgers.csv"), "w") as fh:
            fh.write("x,hedge,shockwave\n")
            hedge = logcosh_hedge_field(pb, xs, 0.0)
            wave = -pb.lam * burgers_scaled(pb.gamma * pb.lam, delta, 1.0, xs, 0.0)
            for x, h, w in zip(xs, hedge, wave):
                fh.write("%.17g,%.17g,%.17g\n" % (x, h, w))
    if "tilt" in artifacts:
        export_tilt_csv(artifacts["tilt"], _path("tilt.csv"))
    if "battery" in artifacts:
        with open(_path("verify.csv"), "w") as fh:
            fh.write("criterion,passed,detail\n")
            for r in artifacts["battery"]:
                fh.write('%s,%s,"%s"\n' % (r.name, int(r.passed), r.detail))

    manifest = {
        "subcommand": report.subcommand,
        "config_digest": report.input_digest,
        "exit_status": report.exit_status,
        "metrics": {k: _jsonify(v) for k, v in sorted(report.metrics.items())},
        "versions": {
            "impact_hedge": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(_path("manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written


def _jsonify(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="impact-hedge",
        description="Indifference-quote pricing, hedging and simulation engine.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="scenario YAML file")
    parser.add_argument("--out", default=None, help="output directory "
                        f"(default: config value or ${OUT_ENV_VAR})")
    parser.add_argument("--seed", type=int, default=None, help="override simulation seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for path simulation (advisory)")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except yaml.YAMLError as exc:
        print(f"config error: malformed YAML: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.seed is not None:
        config.seed = int(args.seed)
        config.raw["simulation"]["seed"] = int(args.seed)
    if args.out is not None:
        config.out_dir = args.out
        config.raw["output"]["directory"] = args.out

    try:
        report, artifacts = run_scenario(config, args.subcommand)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidSpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        written = emit_outputs(report, artifacts, config.out_dir)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    for key, val in sorted(report.metrics.items()):
        print(f"{key}: {val}")
    if args.subcommand == "verify":
        for r in artifacts["battery"]:
            print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    for p in written:
        print(f"wrote {p}")
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
