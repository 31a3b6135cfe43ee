"""Trial-log CSV I/O and the JSON analysis report.

CSV columns: ``trial_index, alpha_slot, beta_slot, alpha_deg, beta_deg, a, b``
and, for sources with counterfactual values, ``a0, a1, b0, b1``. Slots are
0 (unprimed) or 1 (primed).

Report top-level keys: ``config, space1, space2, frequentism, feasibility,
interpretation, meta``. Inadmissible analyses appear as refusal blocks and
never carry numbers.
"""

from __future__ import annotations

import csv
import io
import json
import time
from typing import Optional

import numpy as np

import belllab
from belllab.core import PAIR_NAMES, DomainError, SettingSet
from belllab.config import RunConfig
from belllab.estimators import Space, accumulate, no_signaling_report, space1_ch, space2_ch
from belllab.feasibility import (
    ContextDistributions,
    ch_from_contexts,
    solve_feasibility,
    solve_feasibility_relaxed,
)
from belllab.frequentist import (
    MIN_LENGTH,
    STANDARD_RULES,
    build_collectives,
    collective_compatibility_guard,
    convergence_diagnostic,
    randomness_diagnostic,
    space1_request,
    space2_request,
)
from belllab.interpretation import CITATIONS, admissibility, blame
from belllab.models import TrialBatch

BASE_COLUMNS = ["trial_index", "alpha_slot", "beta_slot", "alpha_deg", "beta_deg", "a", "b"]
QUAD_COLUMNS = ["a0", "a1", "b0", "b1"]


class LogFormatError(ValueError):
    """Malformed trial log."""


def write_trial_log(batch: TrialBatch, fh) -> None:
    deg = batch.settings.degrees()
    cols = BASE_COLUMNS + (QUAD_COLUMNS if batch.quadruples is not None else [])
    fh.write(",".join(cols) + "\n")
    left = [repr(deg[0]), repr(deg[1])]
    right = [repr(deg[2]), repr(deg[3])]
    q = batch.quadruples
    lines = []
    for i in range(len(batch)):
        s, t = int(batch.alpha_slot[i]), int(batch.beta_slot[i])
        row = f"{batch.trial_index[i]},{s},{t},{left[s]},{right[t]},{batch.a[i]},{batch.b[i]}"
        if q is not None:
            row += ",{},{},{},{}".format(*q[i])
        lines.append(row)
    fh.write("\n".join(lines) + "\n")


def trial_log_text(batch: TrialBatch) -> str:
    buf = io.StringIO()
    write_trial_log(batch, buf)
    return buf.getvalue()


def _bit(value: str, col: str, line: int) -> int:
    if value not in ("0", "1"):
        raise LogFormatError(f"line {line}: column {col} must be 0 or 1, got {value!r}")
    return int(value)


def read_trial_log(fh, settings: Optional[SettingSet] = None) -> TrialBatch:
    """Parse a trial log. Errors name the offending line (header is line 1)."""
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        raise LogFormatError("line 1: empty trial log")
    if header[:7] != BASE_COLUMNS or header[7:] not in ([], QUAD_COLUMNS):
        raise LogFormatError(f"line 1: unexpected header {header}")
    has_quads = len(header) == 11
    rows = []
    angles = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise LogFormatError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            idx = int(row[0])
            ad, bd = float(row[3]), float(row[4])
        except ValueError as e:
            raise LogFormatError(f"line {line}: {e}") from None
        if idx < 0:
            raise LogFormatError(f"line {line}: negative trial_index")
        s, t = _bit(row[1], "alpha_slot", line), _bit(row[2], "beta_slot", line)
        for key, val in ((("L", s), ad), (("R", t), bd)):
            if angles.setdefault(key, val) != val:
                raise LogFormatError(f"line {line}: angle for setting slot {key} changed")
        vals = [idx, s, t, _bit(row[5], "a", line), _bit(row[6], "b", line)]
        if has_quads:
            vals += [_bit(row[7 + j], QUAD_COLUMNS[j], line) for j in range(4)]
            if vals[5 + s] != vals[3] or vals[7 + t] != vals[4]:
                raise LogFormatError(f"line {line}: outcome disagrees with counterfactual columns")
        rows.append(vals)
    if not rows:
        raise LogFormatError("trial log has no data rows")
    data = np.array(rows, dtype=np.int64)
    if settings is None:
        settings = SettingSet.from_degrees(angles.get(("L", 0), 0.0), angles.get(("L", 1), 0.0),
                                           angles.get(("R", 0), 0.0), angles.get(("R", 1), 0.0))
    return TrialBatch(settings, data[:, 0], data[:, 1].astype(np.int8), data[:, 2].astype(np.int8),
                      data[:, 3].astype(np.int8), data[:, 4].astype(np.int8),
                      data[:, 5:9].astype(np.int8) if has_quads else None)


def refusal(status: str, citations, reason: Optional[str] = None) -> dict:
    citations = list(citations)
    return {"refused": True, "status": status, "citations": citations,
            "reason": reason or " ".join(CITATIONS.get(c, c) for c in citations)}


def _frequentism_block(batch: TrialBatch, cfg: RunConfig) -> dict:
    p = cfg.frequentism
    out = {"parameters": {"eps": p.eps, "tail_fraction": p.tail_fraction,
                          "selection_eps": p.selection_eps, "attribute": list(p.attribute),
                          "rule_library": [r.name for r in STANDARD_RULES],
                          "rule_library_note": "fixed surrogate for the admissible selections"},
           "collectives": {}}
    for name, c in build_collectives(batch).items():
        block = {"length": len(c)}
        if len(c) >= MIN_LENGTH:
            block["convergence"] = convergence_diagnostic(c, p.attribute, p.eps,
                                                          p.tail_fraction).to_dict()
            block["randomness"] = [r.to_dict() for r in randomness_diagnostic(
                c, STANDARD_RULES, p.attribute, p.selection_eps)]
        else:
            block["insufficient_data"] = True
        out["collectives"][name] = block
    out["guard"] = {"space1": collective_compatibility_guard(space1_request()).to_dict(),
                    "space2": collective_compatibility_guard(space2_request()).to_dict()}
    return out


def build_report(batch: TrialBatch, cfg: RunConfig, trial_log: Optional[str] = None,
                 model_known: bool = True) -> dict:
    """Run admissibility first, then only the admissible requested analyses.

    ``trial_log`` names the CSV the batch was read from, if any;
    ``model_known=False`` drops the model echo when only a log was given.
    """
    t0 = time.perf_counter()
    verdict = admissibility(cfg.mode, cfg.flags)
    requested = set(cfg.analyses)
    counts = accumulate(batch)
    echo = cfg.echo()
    echo["trial_source"] = trial_log if trial_log is not None else "simulated"
    if not model_known:
        echo["model"] = None
    report: dict = {"config": echo}
    evals = {}

    if "space1" in requested:
        entry = verdict.space1
        if entry.runnable:
            ev = space1_ch(counts)
            evals[Space.SPACE1] = ev
            report["space1"] = {**ev.to_dict(), "counts": counts.to_dict(),
                                "no_signaling": no_signaling_report(counts).to_dict()}
        else:
            report["space1"] = refusal(entry.status.value, entry.citations)

    if "space2" in requested:
        entry = verdict.space2
        if not entry.runnable:
            report["space2"] = refusal(entry.status.value, entry.citations)
        elif batch.quadruples is None:
            report["space2"] = refusal("unavailable", ["no-counterfactual-record"],
                                       "This trial source records no values for unmeasured "
                                       "settings.")
        else:
            ev = space2_ch(batch.quadruples)
            evals[Space.SPACE2] = ev
            report["space2"] = {**ev.to_dict(), "n_quadruples": len(batch)}

    if "frequentism" in requested:
        report["frequentism"] = _frequentism_block(batch, cfg)

    if "feasibility" in requested:
        entry = verdict.space2
        if not entry.runnable:
            report["feasibility"] = refusal(entry.status.value, entry.citations)
        else:
            dists = ContextDistributions.from_counts(counts)
            cert = solve_feasibility(dists, cfg.feasibility.tol)
            relaxed = solve_feasibility_relaxed(dists, counts.n_pair, cfg.feasibility.k_sigma,
                                                cfg.feasibility.tol)
            report["feasibility"] = {"contexts": dists.to_dict(),
                                     "ch_from_contexts": ch_from_contexts(dists),
                                     "certificate": cert.to_dict(),
                                     "relaxed": relaxed.to_dict()}

    report["interpretation"] = {"admissibility": verdict.to_dict(),
                                "blame": blame(cfg.mode, verdict, evals, cfg.blame_sigma).to_dict()}
    report["meta"] = {"tool": "belllab", "version": belllab.__version__, "seed": cfg.seed,
                      "n_trials": len(batch),
                      "wall_clock_seconds": time.perf_counter() - t0}
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def contexts_from_json(d: dict) -> tuple[ContextDistributions, Optional[np.ndarray]]:
    """``{"contexts": {"ab": [p00, p01, p10, p11], ...}, "n_pair": [...]?}``"""
    try:
        ctx = d["contexts"]
        raw = [ctx[name] for name in PAIR_NAMES]
    except (KeyError, TypeError) as e:
        raise DomainError(f"contexts file needs a 'contexts' table with keys {PAIR_NAMES}") from e
    dists = ContextDistributions.project(raw)
    n_pair = d.get("n_pair")
    return dists, None if n_pair is None else np.asarray(n_pair, dtype=float)
