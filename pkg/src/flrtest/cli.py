"""Command-line surface.

Five subcommands, each driven by one INI-style config file:

    flrtest quantiles   config.ini   simulate the pivot quantile table
    flrtest simulate    config.ini   generate a benchmark dataset as CSV
    flrtest test        config.ini   one-sample test on supplied data
    flrtest changepoint config.ini   change-point / two-sample test
    flrtest curve       config.ini   Monte Carlo rejection curve

The config file is the artifact: no flag overrides anything except
``--seed`` (every seed field) and ``--out`` (the output path). Output is
a pure function of the config and input files, so reruns are
byte-identical. Errors exit nonzero with one ``ClassName: message`` line
on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass

from .changepoint import SplitPlan, test_cp_location, test_cp_prediction
from .dataio import (
    format_curve_csv,
    format_test_result,
    read_data_csv,
    read_kernel_csv,
    read_quantile_table,
    write_data_csv,
    write_quantile_table,
)
from .errors import ConfigError, FlrError, FormatError
from .regression import Dataset
from .selfnorm import (
    DEFAULT_ALPHAS,
    NuMeasure,
    default_nu,
    test_location,
    test_prediction,
    w_quantile,
)
from .simulate import (
    SimConfig,
    benchmark_null_slope,
    gen_dataset,
    rejection_curve,
)

__all__ = ["RunConfig", "main"]

_MISSING = object()


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: canonical, ordered (section, key, value) text.

    The canonical form makes round-trips exact: parsing the emitted text
    yields an equal RunConfig.
    """

    sections: tuple

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise FormatError(f"config parse failure: {exc}") from None
        secs = []
        for name in sorted(parser.sections()):
            items = tuple(sorted(parser.items(name)))
            secs.append((name, items))
        return cls(tuple(secs))

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def emit(self) -> str:
        lines = []
        for name, items in self.sections:
            lines.append(f"[{name}]")
            for key, val in items:
                lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)

    def get(self, section: str, key: str, default=_MISSING) -> str:
        for name, items in self.sections:
            if name == section:
                for k, v in items:
                    if k == key:
                        return v
        if default is _MISSING:
            raise ConfigError(f"config is missing [{section}] {key}")
        return default

    def _typed(self, caster, kind, section, key, default):
        raw = self.get(section, key, default)
        if raw is default and not isinstance(raw, str):
            return raw
        try:
            return caster(raw)
        except (TypeError, ValueError):
            raise ConfigError(
                f"config [{section}] {key} = {raw!r} is not {kind}"
            ) from None

    def getint(self, section, key, default=_MISSING) -> int:
        return self._typed(int, "an integer", section, key, default)

    def getfloat(self, section, key, default=_MISSING) -> float:
        return self._typed(float, "a number", section, key, default)

    def getfloats(self, section, key, default=_MISSING):
        caster = lambda raw: tuple(float(tok) for tok in raw.split())
        return self._typed(caster, "a list of numbers", section, key, default)

    def getbool(self, section, key, default=_MISSING) -> bool:
        def caster(raw):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)

        return self._typed(caster, "a boolean", section, key, default)


def _nu_from(cfg: RunConfig) -> NuMeasure:
    support = cfg.getfloats("nu", "support", None)
    if support is None:
        return default_nu()
    weights = cfg.getfloats("nu", "weights", None)
    if weights is None:
        weights = tuple(1.0 / len(support) for _ in support)
    return NuMeasure(support, weights)


def _table_params(cfg: RunConfig, seed_override):
    seed = cfg.getint("table", "seed", 0)
    if seed_override is not None:
        seed = seed_override
    return {
        "replications": cfg.getint("table", "replications", 100_000),
        "steps": cfg.getint("table", "steps", 1000),
        "seed": seed,
    }


def _load_or_build_table(cfg: RunConfig, nu: NuMeasure, seed_override):
    """Load the table file, or simulate it from [table] and save it there."""
    path = cfg.get("paths", "table", None)
    if path is None:
        raise ConfigError("config is missing [paths] table")
    if os.path.exists(path):
        table = read_quantile_table(path)
        if not nu.matches(table.nu):
            raise ConfigError(f"table {path} was simulated under a different nu")
        return table
    params = _table_params(cfg, seed_override)
    alphas = cfg.getfloats("table", "alphas", DEFAULT_ALPHAS)
    table = w_quantile(nu, alphas, **params)
    write_quantile_table(path, table)
    return table


def _sim_config(cfg: RunConfig, seed_override) -> SimConfig:
    seed = cfg.getint("sim", "seed", 0)
    if seed_override is not None:
        seed = seed_override
    slope_path = cfg.get("sim", "slope", None)
    slope = read_kernel_csv(slope_path) if slope_path else None
    slope2_path = cfg.get("sim", "slope2", None)
    slope2 = read_kernel_csv(slope2_path) if slope2_path else None
    theta = cfg.getfloat("sim", "theta", None)
    if slope2_path and theta is None:
        raise ConfigError("config sets [sim] slope2 but no theta")
    if theta is not None and slope2 is None:
        slope2 = benchmark_null_slope()
    return SimConfig(
        N=cfg.getint("sim", "n"),
        k=cfg.getint("sim", "k", 1),
        dependence=cfg.get("sim", "dependence", "iid"),
        rho=cfg.getfloat("sim", "rho", 0.6),
        burnin=cfg.getint("sim", "burnin", 200),
        noise_scale=cfg.getfloat("sim", "noise_scale", 1.0),
        seed=seed,
        nu=_nu_from(cfg),
        alpha=cfg.getfloat("sim", "alpha", 0.05),
        deltas=cfg.getfloats("sim", "deltas", (0.0,)),
        replications=cfg.getint("sim", "replications", 1),
        slope=slope,
        slope2=slope2,
        theta=theta,
    )


def _load_dataset(cfg: RunConfig) -> Dataset:
    xpath = cfg.get("paths", "x")
    ypath = cfg.get("paths", "y")
    X = read_data_csv(xpath)
    Y = read_data_csv(ypath)
    if len(X) != len(Y):
        raise FormatError(
            f"{xpath} has {len(X)} observations, {ypath} has {len(Y)}"
        )
    return Dataset(tuple(X), tuple(Y))


def _null_slope(cfg: RunConfig, data: Dataset):
    path = cfg.get("paths", "s0", None)
    if path is None:
        return benchmark_null_slope(data.domain_space)
    return read_kernel_csv(path)


def _out_path(cfg: RunConfig, out_override, default):
    if out_override is not None:
        return out_override
    return cfg.get("paths", "out", default)


def cmd_quantiles(cfg: RunConfig, seed_override, out_override) -> int:
    nu = _nu_from(cfg)
    params = _table_params(cfg, seed_override)
    alphas = cfg.getfloats("table", "alphas", DEFAULT_ALPHAS)
    table = w_quantile(nu, alphas, **params)
    path = out_override or cfg.get("paths", "table", "quantiles.txt")
    write_quantile_table(path, table)
    for alpha in sorted(table.alphas, reverse=True):
        print(f"q[alpha={alpha:g}] = {table.alphas[alpha]!r}")
    print(f"wrote {path}")
    return 0


def cmd_simulate(cfg: RunConfig, seed_override, out_override) -> int:
    sim = _sim_config(cfg, seed_override)
    data = gen_dataset(sim)
    outdir = _out_path(cfg, out_override, ".")
    os.makedirs(outdir, exist_ok=True)
    xpath = os.path.join(outdir, "x.csv")
    ypath = os.path.join(outdir, "y.csv")
    write_data_csv(xpath, list(data.X))
    write_data_csv(ypath, list(data.Y))
    print(f"wrote {xpath} and {ypath} ({sim.N} observations)")
    return 0


def _one_sample(cfg: RunConfig, seed_override, out_override, cp: bool) -> int:
    data = _load_dataset(cfg)
    nu = _nu_from(cfg)
    table = _load_or_build_table(cfg, nu, seed_override)
    mode = cfg.get("test", "mode", "location")
    if mode not in ("location", "prediction"):
        raise ConfigError(f"[test] mode must be location or prediction, got {mode!r}")
    delta = cfg.getfloat("test", "delta", 0.0)
    k = cfg.getint("test", "k")
    alpha = cfg.getfloat("test", "alpha", 0.05)
    center = cfg.getbool("test", "center", True)
    if cp:
        boundary = cfg.getint("test", "boundary", None)
        plan = None if boundary is None else SplitPlan(boundary, "fixed")
        fn = test_cp_prediction if mode == "prediction" else test_cp_location
        result = fn(data, delta, k, nu, alpha, table, plan=plan, center=center)
        which = f"changepoint-{mode}"
    else:
        S0 = _null_slope(cfg, data)
        fn = test_prediction if mode == "prediction" else test_location
        result = fn(data, S0, delta, k, nu, alpha, table, center=center)
        which = mode
    report = format_test_result(result, which)
    path = _out_path(cfg, out_override, None)
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(report)
    sys.stdout.write(report)
    return 0


def cmd_test(cfg, seed_override, out_override) -> int:
    return _one_sample(cfg, seed_override, out_override, cp=False)


def cmd_changepoint(cfg, seed_override, out_override) -> int:
    return _one_sample(cfg, seed_override, out_override, cp=True)


def cmd_curve(cfg: RunConfig, seed_override, out_override) -> int:
    sim = _sim_config(cfg, seed_override)
    which = cfg.get("curve", "which", "location")
    workers = cfg.getint("curve", "workers", 1)
    nu = _nu_from(cfg)
    table = _load_or_build_table(cfg, nu, seed_override)
    if which == "changepoint":
        S0 = benchmark_null_slope()
    else:
        s0_path = cfg.get("paths", "s0", None)
        S0 = read_kernel_csv(s0_path) if s0_path else benchmark_null_slope()
    curve = rejection_curve(sim, which, S0, table, workers=workers)
    text = format_curve_csv(curve)
    path = _out_path(cfg, out_override, "curve.csv")
    with open(path, "w", newline="") as fh:
        fh.write(text)
    print(f"wrote {path} ({curve.replications} replications, {curve.failures} failed)")
    return 0


_COMMANDS = {
    "quantiles": cmd_quantiles,
    "simulate": cmd_simulate,
    "test": cmd_test,
    "changepoint": cmd_changepoint,
    "curve": cmd_curve,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flrtest",
        description="Self-normalized relevant-hypothesis tests for functional linear models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("config", help="INI config file driving the run")
        p.add_argument("--seed", type=int, default=None, help="override every seed field")
        p.add_argument("--out", default=None, help="override the output path")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        return _COMMANDS[args.command](cfg, args.seed, args.out)
    except FlrError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
