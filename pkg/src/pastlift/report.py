"""Machine-readable report documents, versioned as ``past-lift/1``.

Every rational is serialized as a ``num`` or ``num/den`` string so that no
precision is lost; positions use ``e`` for the root and dotted paths
otherwise. The shipped JSON schema (``report_schema.json``) validates every
document this module produces.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from typing import Optional

from .analyzer import AnalysisReport, ClosureArrow, Verdict
from .props import PropertyReport
from .semantics import McSummary, SemanticsTrace
from .spareness import SparenessCounterexample, SpareVerdict
from .system import Ptrs
from .terms import pos_to_str, term_to_str

FORMAT = "past-lift/1"

# final distributions beyond these sizes are summarized, not listed
STATE_ENTRY_LIMIT = 50
STATE_TERM_SIZE_LIMIT = 200


def _rat(x: Fraction) -> str:
    return str(x)


def load_schema() -> dict:
    with resources.files("pastlift").joinpath("report_schema.json").open("rb") as fh:
        return json.load(fh)


def properties_doc(system: Ptrs, report: PropertyReport) -> dict:
    return {
        "left_linear": report.left_linear,
        "right_linear": report.right_linear,
        "non_erasing": report.non_erasing,
        "non_duplicating": report.non_duplicating,
        "non_overlapping": report.non_overlapping,
        "overlay": report.overlay,
        "orthogonal": report.orthogonal,
        "wcr": report.wcr.value,
        "overlaps": [
            {
                "outer": o.outer_index,
                "inner": o.inner_index,
                "position": pos_to_str(o.position),
            }
            for o in report.overlaps
        ],
    }


def check_doc(system: Ptrs, report: PropertyReport) -> dict:
    return {
        "format": FORMAT,
        "kind": "check",
        "trivial": system.is_trivial,
        "properties": properties_doc(system, report),
    }


def _verdict_doc(v: Verdict) -> dict:
    return {
        "id": v.theorem_id,
        "title": v.title,
        "applicability": v.applicability,
        "preconditions": [
            {"name": p.name, "value": p.value, "witness": p.witness}
            for p in v.preconditions
        ],
        "implications": [
            {"from": a.token(), "to": b.token()} for a, b in v.implications
        ],
    }


def _arrow_doc(c: ClosureArrow) -> dict:
    return {"from": c.source.token(), "to": c.target.token(), "chain": list(c.chain)}


def analysis_doc(system: Ptrs, reports: list[AnalysisReport], scope: str) -> dict:
    sections = []
    for r in reports:
        sections.append(
            {
                "engine": r.kind,
                "properties": properties_doc(system, r.properties),
                "spare": r.spare.value if r.spare is not None else None,
                "spare_evidence": r.spare_evidence,
                "verdicts": [_verdict_doc(v) for v in r.verdicts],
                "closure": [_arrow_doc(c) for c in r.closure],
                "assertions": [p.token() for p in r.assertions],
                "conclusions": [_arrow_doc(c) for c in r.conclusions],
                "notes": r.notes,
            }
        )
    return {"format": FORMAT, "kind": "analyze", "scope": scope, "sections": sections}


def exact_trace_doc(system: Ptrs, trace: SemanticsTrace) -> dict:
    final = trace.states[-1]
    doc = {
        "format": FORMAT,
        "kind": "simulate-exact",
        "start": term_to_str(trace.start),
        "strategy": trace.strategy.value,
        "policy": trace.policy_name,
        "depth": trace.depth,
        "nf_mass": [_rat(m) for m in trace.nf_masses],
        "support_sizes": [len(mu) for mu in trace.states],
        "lower_bound": _rat(trace.lower_bound),
        "upper_bound": "1",
        "partial_edl": _rat(trace.partial_edl),
    }
    if len(final) <= STATE_ENTRY_LIMIT and all(
        t.size <= STATE_TERM_SIZE_LIMIT for _, t in final.entries
    ):
        doc["final_state"] = [
            {"p": _rat(p), "term": term_to_str(t)} for p, t in final.entries
        ]
    else:
        doc["final_state_omitted"] = (
            f"support {len(final)} or term sizes exceed the rendering limits"
        )
    return doc


def mc_doc(summary: McSummary, start, strategy, policy_name: str) -> dict:
    return {
        "format": FORMAT,
        "kind": "simulate-mc",
        "start": term_to_str(start),
        "strategy": strategy.value,
        "policy": policy_name,
        "samples": summary.samples,
        "step_cap": summary.step_cap,
        "seed": summary.seed,
        "terminated": summary.terminated,
        "estimate": summary.estimate,
        "censored_fraction": summary.censored_fraction,
        "mean_steps_of_terminated": summary.mean_steps_of_terminated,
    }


def adversary_doc(start, strategy, depth: int, bound: Fraction) -> dict:
    return {
        "format": FORMAT,
        "kind": "adversary",
        "start": term_to_str(start),
        "strategy": strategy.value,
        "depth": depth,
        "lower_bound": _rat(bound),
    }


def counterexample_doc(cex: SparenessCounterexample) -> dict:
    return {
        "start": term_to_str(cex.start_term),
        "trace": [
            {
                "term": term_to_str(s.term),
                "position": pos_to_str(s.position),
                "rule": s.rule_index,
                "branch": s.branch,
            }
            for s in cex.step_trace
        ],
        "violating_step": cex.violating_step,
        "duplicated_variable": cex.duplicated_variable,
    }


def spare_doc(
    verdict: SpareVerdict,
    falsified: Optional[SparenessCounterexample],
    ran_falsifier: bool,
    depth: int,
    arg_depth: int,
) -> dict:
    doc: dict = {
        "format": FORMAT,
        "kind": "spare",
        "verdict": verdict.value,
        "falsifier": None,
    }
    if ran_falsifier:
        doc["falsifier"] = {
            "depth": depth,
            "arg_depth": arg_depth,
            "found": falsified is not None,
            "counterexample": counterexample_doc(falsified) if falsified else None,
        }
    return doc
