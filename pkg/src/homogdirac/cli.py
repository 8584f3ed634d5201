"""Configuration-driven command line frontend.

Three subcommands:

* ``verify``   -- run the invariant checks applicable to the configured
  group/bundle/connection and emit a JSON report, one entry per check
  with its residual, tolerance and verdict.  Exit status 1 if any check
  fails, 2 on configuration errors.
* ``spectrum`` -- assemble the isotypic blocks of the Hodge-Dirac
  operator up to a level cap and emit them as CSV, ordered by level and
  ascending eigenvalue.
* ``monopole`` -- sample the projection and frame Gram matrices of a
  monopole bundle at Haar-random points and emit them as CSV rows
  (Euler angles followed by row-major real/imaginary entries).

All randomness is drawn from the configured seed, so identical
configurations produce byte-identical outputs.  ``HOMOG_DIRAC_THREADS``
caps the number of worker threads used for independent spectral levels.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import checks as _checks
from .dirac import block_closure, spectral_block
from .geometry import Connection, canonical_connection, levi_civita_connection
from .groups import GroupModel
from .bundles import frame_gram, monopole_bundle, projection_section
from .sections import EvalPoints

__all__ = ["RunConfig", "load_config", "run_verify", "run_spectrum", "run_monopole", "main"]


@dataclass
class RunConfig:
    """Everything a command needs; mirrors the CLI flags."""

    group: str = "su2"
    subgroup: str = "u1"
    bundle: str = "clifford"
    charge: int = 1
    level: int = -1  # ambient level; negative means minimal
    connection: str = "canonical"
    quadrature_bandwidth: int = 8
    sample_count: int = 100
    seed: int = 0
    levels: int = 4
    tolerances: dict = field(default_factory=dict)
    output: str | None = None

    def make_group(self) -> GroupModel:
        if os.path.exists(self.group):
            return GroupModel.from_config(self.group)
        key = (self.group, self.subgroup)
        if key == ("su2", "u1"):
            return GroupModel.su2()
        if key in (("su2", "trivial"), ("su2", "e"), ("su2-trivial-k", "trivial"),
                   ("su2-trivial-k", "e"), ("su2-trivial-k", "u1")):
            return GroupModel.su2_trivial_k()
        raise ValueError(f"unknown group/subgroup pair {key!r}")

    def make_connection(self, group: GroupModel) -> Connection:
        if self.connection == "canonical":
            return canonical_connection(group)
        if self.connection == "levi-civita":
            return levi_civita_connection(group)
        if os.path.exists(self.connection):
            return load_gamma_file(group, self.connection)
        raise ValueError(f"unknown connection {self.connection!r}")

    def as_dict(self) -> dict:
        return {
            "group": self.group, "subgroup": self.subgroup, "bundle": self.bundle,
            "charge": self.charge, "level": self.level, "connection": self.connection,
            "quadrature_bandwidth": self.quadrature_bandwidth,
            "sample_count": self.sample_count, "seed": self.seed, "levels": self.levels,
        }


def load_gamma_file(group: GroupModel, path: str) -> Connection:
    """Correction blocks from a text file: one fiber operator per tangent axis."""
    with open(path) as fh:
        vals = [float(v) for v in fh.read().split()]
    p = group.m_dim
    if len(vals) != p ** 3:
        raise ValueError(
            f"gamma file holds {len(vals)} numbers; expected {p} blocks of {p}x{p}")
    gamma = np.array(vals).reshape(p, p, p)
    return Connection(group, gamma, name=os.path.basename(path))


def load_config(path: str) -> RunConfig:
    """Flat key=value config with [run] and optional [tolerances] sections."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_string(fh.read())
    cfg = RunConfig()
    if cp.has_section("run"):
        run = cp["run"]
        for key in ("group", "subgroup", "bundle", "connection", "output"):
            if key in run:
                setattr(cfg, key, run.get(key))
        for key in ("charge", "level", "quadrature_bandwidth", "sample_count",
                    "seed", "levels"):
            if key in run:
                setattr(cfg, key, run.getint(key))
    if cp.has_section("tolerances"):
        for key, val in cp["tolerances"].items():
            v = float(val)
            if v <= 0:
                raise ValueError(f"tolerance {key} must be positive")
        cfg.tolerances = {k: float(v) for k, v in cp["tolerances"].items()}
    return cfg


# -- verify ---------------------------------------------------------------------


def run_verify(cfg: RunConfig) -> dict:
    """Execute the applicable invariant checks and build the report."""
    group = cfg.make_group()
    rng = np.random.default_rng(cfg.seed)
    results = _checks.run_suite(cfg, group, rng)
    report = {
        "config": cfg.as_dict(),
        "checks": results,
        "pass": all(c["pass"] for c in results),
    }
    return report


# -- spectrum ---------------------------------------------------------------------


def run_spectrum(cfg: RunConfig) -> list:
    """Rows (level, index, eigenvalue, asymmetry, closure) for the CSV output."""
    group = cfg.make_group()
    if group.k_dim != 1:
        raise ValueError("spectrum blocks are cataloged for circle quotients")
    conn = cfg.make_connection(group)
    bandwidth = max(cfg.quadrature_bandwidth, 2 * cfg.levels + 2 * int(group.ad_bandwidth))
    rule = group.haar_rule(bandwidth)
    threads = max(1, int(os.environ.get("HOMOG_DIRAC_THREADS", "1")))
    levels = list(range(cfg.levels + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda lv: spectral_block(conn, lv, rule), levels))
    else:
        blocks = [spectral_block(conn, lv, rule) for lv in levels]
    rows = []
    for b in blocks:
        others = [o for o in blocks if o.level != b.level]
        closure = block_closure([b] + others, rule, group) if others else 0.0
        for idx, ev in enumerate(np.sort(b.eigenvalues)):
            rows.append((b.level, idx, float(ev), b.asymmetry, closure))
    return rows


# -- monopole ---------------------------------------------------------------------


def run_monopole(cfg: RunConfig) -> tuple:
    """Header and rows of sampled projection/Gram matrices for a monopole bundle."""
    group = cfg.make_group()
    bundle = monopole_bundle(group, cfg.charge,
                             cfg.level if cfg.level >= 0 else None)
    rng = np.random.default_rng(cfg.seed)
    n = bundle.ambient_dim
    proj = projection_section(bundle)
    gram = frame_gram(bundle)
    header = ["alpha", "beta", "gamma"]
    for tag in ("p", "gram"):
        for i in range(n):
            for j in range(n):
                header += [f"{tag}_re_{i}{j}", f"{tag}_im_{i}{j}"]
    rows = []
    for _ in range(cfg.sample_count):
        alpha = rng.uniform(0.0, 4 * np.pi)
        gamma_angle = rng.uniform(0.0, 4 * np.pi)
        beta = float(np.arccos(rng.uniform(-1.0, 1.0)))
        x = group.euler_element(alpha, beta, gamma_angle)
        pts = EvalPoints.of(group, [x])
        pv = proj.values(pts)[0]
        gv = gram.values(pts)[0]
        row = [alpha, beta, gamma_angle]
        for mat in (pv, gv):
            for i in range(n):
                for j in range(n):
                    row += [float(mat[i, j].real), float(mat[i, j].imag)]
        rows.append(row)
    return header, rows


# -- output helpers -----------------------------------------------------------------


def _write_json(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(header: list, rows: list, path: str | None) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (overridden by explicit flags)")
    parser.add_argument("--group", help="group name or group config file")
    parser.add_argument("--subgroup", help="subgroup name (u1 | trivial)")
    parser.add_argument("--bundle", help="tangent | clifford | monopole")
    parser.add_argument("--charge", type=int, help="monopole charge (twice the weight)")
    parser.add_argument("--level", type=int, help="monopole ambient level (twice the spin)")
    parser.add_argument("--connection", help="canonical | levi-civita | gamma file")
    parser.add_argument("--quadrature-bandwidth", type=int, dest="quadrature_bandwidth")
    parser.add_argument("--sample-count", type=int, dest="sample_count")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--levels", type=int, help="isotypic level cap")
    parser.add_argument("--out", dest="output", help="output path (stdout if omitted)")


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in ("group", "subgroup", "bundle", "charge", "level", "connection",
                "quadrature_bandwidth", "sample_count", "seed", "levels", "output"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def main(argv: list | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="homogdirac",
        description="equivariant bundles and Hodge-Dirac operators on homogeneous spaces")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "spectrum", "monopole"):
        _add_common(sub.add_parser(name))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses its own exit codes
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = _build_config(args)
        if args.command == "verify":
            report = run_verify(cfg)
            _write_json(report, cfg.output)
            return 0 if report["pass"] else 1
        if args.command == "spectrum":
            rows = run_spectrum(cfg)
            header = ["level", "index", "eigenvalue", "asymmetry_norm", "closure_residual"]
            _write_csv(header, rows, cfg.output)
            return 0
        header, rows = run_monopole(cfg)
        _write_csv(header, rows, cfg.output)
        return 0
    except (ValueError, KeyError, OSError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
