"""Local audit service: the HTTP backend for the review workflow.

Reviewers work a queue of proposed near-duplicate merges; every verdict
goes through one serialized writer that appends to the decision log
before touching state. GET endpoints are read-only and safe to hit
concurrently. The service holds no truth of its own: kill it at any
point and a restart rebuilds the identical state from the run directory.
"""

from __future__ import annotations

import datetime as dt
import json
import threading
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles

from .runstate import load_run, run_paths, save_state_file
from .textdiff import case_payload
from .tracing import (
    AlreadyDecidedError,
    AuditDecision,
    UnknownPairError,
    apply_decision,
    pending_candidates,
)

__all__ = ["make_app"]


def make_app(run_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the service over an existing run directory.

    If ui_dir (a built static bundle) is provided or found at
    ./frontend/dist, it is served at the root path; the API lives under
    /api either way.
    """
    run_dir = Path(run_dir)
    state, config, log = load_run(run_dir)
    lock = threading.Lock()
    app = FastAPI(title="lineage audit service")

    @app.get("/api/status")
    def status() -> dict:
        with lock:
            return {
                "run_id": run_dir.name,
                "phase": state.phase,
                "counts": state.counts(),
                "iteration": state.iteration,
                "discarded": list(state.discarded),
                "cap_warning": state.cap_warning,
                "config": config.to_dict(),
            }

    @app.get("/api/queue")
    def queue(offset: int = 0, limit: int = 50) -> dict:
        if offset < 0 or limit < 1:
            raise HTTPException(400, "offset must be >= 0 and limit >= 1")
        with lock:
            pending = pending_candidates(state)
            window = pending[offset : offset + limit]
            return {
                "total_pending": len(pending),
                "offset": offset,
                "items": [c.to_dict() for c in window],
            }

    @app.get("/api/pairs/{pair_id}")
    def pair_detail(pair_id: str) -> dict:
        with lock:
            pair = state.candidates.get(pair_id)
            if pair is None:
                raise HTTPException(404, f"unknown pair: {pair_id}")
            pending = pending_candidates(state)
            position = next(
                (i for i, c in enumerate(pending) if c.pair_id == pair_id),
                -1,
            )
            payload = pair.to_dict()
            payload["diff"] = case_payload(
                pair.unmatched_prompt, pair.candidate_prompt
            )
            payload["queue_position"] = position
            return payload

    @app.post("/api/decisions")
    def decide(body: dict = Body(...)) -> dict:
        if not isinstance(body, dict):
            raise HTTPException(400, "body must be an object")
        pair_id = body.get("pair_id")
        verdict = body.get("verdict")
        reviewer = body.get("reviewer", "anonymous")
        if not isinstance(pair_id, str) or not pair_id:
            raise HTTPException(400, "pair_id is required")
        if verdict not in ("accept", "reject", "skip"):
            raise HTTPException(400, f"verdict must be accept/reject/skip, got {verdict!r}")
        if not isinstance(reviewer, str) or not reviewer:
            raise HTTPException(400, "reviewer must be a nonempty string")
        decision = AuditDecision(
            pair_id=pair_id,
            verdict=verdict,
            reviewer=reviewer,
            decided_at=dt.datetime.now(dt.timezone.utc).isoformat(),
        )
        with lock:
            try:
                pair = apply_decision(state, decision, log)
            except UnknownPairError as exc:
                raise HTTPException(404, str(exc)) from exc
            except AlreadyDecidedError as exc:
                raise HTTPException(409, str(exc)) from exc
            save_state_file(run_dir, state)
            return {"applied": pair.to_dict(), "counts": state.counts()}

    @app.get("/api/leaks/case")
    def leak_case(
        train_dataset: str,
        train_instance_id: str,
        benchmark_id: str,
        benchmark_item_id: str,
    ) -> dict:
        cases_path = run_paths(run_dir)["reports"] / "leak_cases.json"
        if not cases_path.exists():
            raise HTTPException(404, "no leak cases stored for this run")
        cases = json.loads(cases_path.read_text(encoding="utf-8"))
        key = (
            f"{train_dataset}/{train_instance_id}"
            f"::{benchmark_id}/{benchmark_item_id}"
        )
        case = cases.get(key)
        if case is None:
            raise HTTPException(404, f"unknown leak case: {key}")
        return case

    @app.get("/api/leaks")
    def leaks(dataset: str | None = None) -> dict:
        report_path = run_paths(run_dir)["reports"] / "leaks.json"
        if not report_path.exists():
            return {"available": False, "records": [], "band_totals": {}, "n_leak": {}}
        report = json.loads(report_path.read_text(encoding="utf-8"))
        records = report.get("records", [])
        if dataset:
            records = [r for r in records if r.get("train_dataset") == dataset]
            return {
                "available": True,
                "records": records,
                "band_totals": {
                    dataset: report.get("band_totals", {}).get(
                        dataset, {"exact": 0, "high": 0, "suspect": 0}
                    )
                },
                "n_leak": {dataset: report.get("n_leak", {}).get(dataset, 0)},
            }
        return {
            "available": True,
            "records": records,
            "band_totals": report.get("band_totals", {}),
            "n_leak": report.get("n_leak", {}),
        }

    if ui_dir is None:
        default_ui = Path("frontend") / "dist"
        if default_ui.is_dir():
            ui_dir = default_ui
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
