"""Command-line front end: scenario files in, deterministic CSV/JSON artifacts out.

Scenario files are flat ``key = value`` documents (``#`` starts a comment);
``--set key=value`` overrides fields after the file is read.  Every run
writes a flat CSV with a fixed column order, a JSON manifest and a
standalone plot script that renders the ROC curves from the CSV.  Output
bytes are identical across repeated runs of the same resolved scenario; the
only timestamp lives in the manifest.

Exit codes: 0 success, 2 validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .fusion import CombinerKind, cfar_threshold
from .harness import (
    SCHEME_CONVENTIONAL,
    SCHEME_PROPOSED,
    RocCurve,
    Scenario,
    equivalence_search,
    expected_rho,
    roc_sweep,
    sweep_param,
)
from .theory import NumericError, qd_proposed_rayleigh, qd_rayleigh, qfa_approx, qfa_proposed

CSV_COLUMNS = (
    "scenario_digest",
    "combiner",
    "scheme",
    "target_pfa",
    "lambda",
    "empirical_pfa",
    "empirical_pfa_ci",
    "empirical_pd",
    "empirical_pd_ci",
    "theory_pfa",
    "theory_pd",
    "trials",
    "seed",
)

SUBCOMMANDS = ("roc", "sweep-l", "sweep-k", "compare", "equivalence", "theory-table")
SWEEP_L_VALUES = (5, 10, 15, 20)
SWEEP_K_VALUES = (1, 3, 5, 7)
EQUIVALENCE_PROPOSED_CRS = 3
EQUIVALENCE_K_RANGE = tuple(range(1, 49))

_COMBINER_NAMES = {"slc": CombinerKind.SLC, "mrc": CombinerKind.MRC, "sls": CombinerKind.SLS}


class ValidationError(ValueError):
    """Bad scenario file, override or field value; maps to exit code 2."""


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _coerce(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in ("n_samples", "num_crs", "history_len", "trials", "seed"):
            return int(raw)
        if key in ("snr_db", "uncertainty_db"):
            return float(raw)
        if key == "combiner":
            name = raw.lower()
            if name not in _COMBINER_NAMES:
                raise ValueError(f"combiner must be one of {sorted(_COMBINER_NAMES)}")
            return _COMBINER_NAMES[name]
        if key == "pfa_grid":
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if key in ("channel_kind", "pu_model", "fading_block"):
            return raw
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"field {key!r}: cannot parse {raw!r} ({exc})") from exc
    raise ValidationError(
        f"unknown key {key!r}; valid keys: "
        "snr_db, n_samples, num_crs, history_len, uncertainty_db, combiner, "
        "trials, seed, pfa_grid, channel_kind, pu_model, fading_block"
    )


def _parse_assignments(lines: Sequence[str], origin: str) -> dict:
    fields: dict = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        if not sep:
            raise ValidationError(f"{origin}:{lineno}: expected 'key = value', got {text!r}")
        fields[key.strip()] = _coerce(key.strip(), value)
    return fields


def parse_scenario(path: str | os.PathLike | None, overrides: Sequence[str] = ()) -> Scenario:
    """Build a validated Scenario from a key=value file plus overrides."""
    fields: dict = {}
    if path is not None:
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
        fields.update(_parse_assignments(lines, str(path)))
    fields.update(_parse_assignments(list(overrides), "--set"))
    try:
        return Scenario(**fields)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _theory_table_rows(scenario: Scenario) -> list[str]:
    rows = []
    rho = expected_rho(scenario)
    for kind in (CombinerKind.SLC, CombinerKind.MRC, CombinerKind.SLS):
        sub = replace(scenario, combiner=kind)
        cfg = sub.fusion_config()
        for target in sub.pfa_grid:
            lam = cfar_threshold(cfg, target)
            conventional = sub.theory_params()
            proposed = sub.theory_params(rho=rho)
            for scheme, pfa, pd in (
                (
                    SCHEME_CONVENTIONAL,
                    qfa_approx(conventional, lam),
                    qd_rayleigh(conventional, lam),
                ),
                (
                    SCHEME_PROPOSED,
                    qfa_proposed(proposed, lam),
                    qd_proposed_rayleigh(proposed, lam),
                ),
            ):
                rows.append(
                    ",".join(
                        (
                            sub.digest(),
                            kind.name,
                            scheme,
                            _fmt(target),
                            _fmt(lam),
                            "",
                            "",
                            "",
                            "",
                            _fmt(pfa),
                            _fmt(pd),
                            "0",
                            str(sub.seed),
                        )
                    )
                )
    return rows


def _curve_rows(curve: RocCurve) -> list[str]:
    digest = curve.scenario.digest()
    rows = []
    for p in curve.points:
        rows.append(
            ",".join(
                (
                    digest,
                    curve.scenario.combiner.name,
                    curve.scheme,
                    _fmt(p.target_pfa),
                    _fmt(p.lam),
                    _fmt(p.empirical_pfa),
                    _fmt(p.empirical_pfa_ci),
                    _fmt(p.empirical_pd),
                    _fmt(p.empirical_pd_ci),
                    _fmt(p.theory_pfa),
                    _fmt(p.theory_pd),
                    str(p.trials),
                    str(curve.scenario.seed),
                )
            )
        )
    return rows


_PLOT_TEMPLATE = """\
#!/usr/bin/env python3
\"\"\"Render ROC curves from {csv_name} (generated alongside this script).\"\"\"

import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open("{csv_name}", newline="") as fh:
    for row in csv.DictReader(fh):
        if not row["empirical_pfa"]:
            continue
        key = (row["combiner"], row["scheme"], row["scenario_digest"][:6])
        series[key].append((float(row["empirical_pfa"]), float(row["empirical_pd"])))

fig, ax = plt.subplots(figsize=(6, 5))
for (combiner, scheme, digest), pts in sorted(series.items()):
    pts.sort()
    ax.plot(*zip(*pts), marker="o", label=f"{{combiner}} {{scheme}} [{{digest}}]")
ax.plot([0, 1], [0, 1], ls=":", c="gray", lw=1)
ax.set_xlabel("probability of false alarm")
ax.set_ylabel("probability of detection")
ax.set_xlim(0, 1)
ax.set_ylim(0, 1)
ax.grid(alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("roc.png", dpi=150)
print("wrote roc.png")
"""


def _write(path: Path, text: str) -> None:
    path.write_text(text, newline="\n")


def run_command(
    subcommand: str,
    scenario: Scenario,
    out_dir: str | os.PathLike,
    threads: int = 1,
) -> dict:
    """Dispatch one subcommand and write its artifacts; returns the manifest."""
    if subcommand not in SUBCOMMANDS:
        raise ValidationError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    extras: dict = {}
    rows: list[str] = []
    if subcommand == "roc":
        for scheme in (SCHEME_CONVENTIONAL, SCHEME_PROPOSED):
            rows.extend(_curve_rows(roc_sweep(scenario, scheme, threads=threads)))
        csv_name = "roc.csv"
    elif subcommand == "compare":
        aucs = {}
        for kind in (CombinerKind.SLC, CombinerKind.MRC, CombinerKind.SLS):
            sub = replace(scenario, combiner=kind)
            for scheme in (SCHEME_CONVENTIONAL, SCHEME_PROPOSED):
                curve = roc_sweep(sub, scheme, threads=threads)
                rows.extend(_curve_rows(curve))
                aucs[f"{kind.name}:{scheme}"] = curve.auc
        extras["auc"] = aucs
        csv_name = "compare.csv"
    elif subcommand == "sweep-l":
        curves = sweep_param(scenario, "history_len", SWEEP_L_VALUES, threads=threads)
        for curve in curves:
            rows.extend(_curve_rows(curve))
        extras["auc_by_history_len"] = {
            str(v): c.auc for v, c in zip(SWEEP_L_VALUES, curves)
        }
        csv_name = "sweep_l.csv"
    elif subcommand == "sweep-k":
        curves = sweep_param(scenario, "num_crs", SWEEP_K_VALUES, threads=threads)
        for curve in curves:
            rows.extend(_curve_rows(curve))
        extras["auc_by_num_crs"] = {str(v): c.auc for v, c in zip(SWEEP_K_VALUES, curves)}
        csv_name = "sweep_k.csv"
    elif subcommand == "equivalence":
        proposed = replace(scenario, num_crs=EQUIVALENCE_PROPOSED_CRS)
        result = equivalence_search(proposed, EQUIVALENCE_K_RANGE, threads=threads)
        rows.extend(_curve_rows(result.proposed_curve))
        for curve in result.conventional_curves:
            rows.extend(_curve_rows(curve))
        extras["equivalence"] = {
            "k_match": result.k_match,
            "auc_gap": result.auc_gap,
            "proposed_auc": result.proposed_auc,
            "proposed_num_crs": EQUIVALENCE_PROPOSED_CRS,
            "searched": list(result.searched),
            "conventional_aucs": list(result.conventional_aucs),
        }
        csv_name = "equivalence.csv"
    else:  # theory-table
        rows.extend(_theory_table_rows(scenario))
        csv_name = "theory_table.csv"

    csv_path = out / csv_name
    _write(csv_path, "\n".join([",".join(CSV_COLUMNS)] + rows) + "\n")
    plot_path = out / "plot_roc.py"
    _write(plot_path, _PLOT_TEMPLATE.format(csv_name=csv_name))
    manifest = {
        "tool_version": __version__,
        "scenario_digest": scenario.digest(),
        "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [csv_name, "plot_roc.py"],
        **extras,
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="css-lab",
        description="Cooperative spectrum sensing experiments and analysis tables.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--scenario", help="path to a flat key=value scenario file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a scenario field (repeatable, applied after the file)",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for grid points (falls back to CSS_LAB_THREADS, then 1)",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("CSS_LAB_THREADS", "1") or "1")
    try:
        scenario = parse_scenario(args.scenario, args.overrides)
        run_command(args.subcommand, scenario, args.out, threads=max(1, threads))
    except ValidationError as exc:
        json.dump({"error": {"type": "validation", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except NumericError as exc:
        json.dump({"error": {"type": "numeric", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
