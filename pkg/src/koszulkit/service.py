"""HTTP service wrapping the task runner.

One generic endpoint runs any task from a JSON request; inputs are builtin
aliases, inline schema objects, or server-side paths.  Responses carry the
canonical report plus the exit code the CLI would have returned.
"""

from __future__ import annotations

from typing import Any, List, Optional, Tuple

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .reports import TOOL_VERSION
from .tasks import COMMANDS, InputError, TaskConfig, parse_field_flag, run_task

app = FastAPI(
    title="koszulkit",
    version=TOOL_VERSION,
    description="Exact bar/cobar computations for dg algebras and ns operads",
)


class TaskRequest(BaseModel):
    command: str
    inputs: List[Any] = Field(default_factory=list,
                              description="aliases, inline objects, or paths")
    field: str = "q"
    weight_bound: int = 3
    arity_bound: int = 6
    d_max: int = 6
    witness_bound: int = 5
    degrees: Optional[Tuple[int, int]] = None
    kind: str = "pi"
    seed: int = 0


class TaskResponse(BaseModel):
    command: str
    verdict: Optional[str] = None
    exit_code: int
    report: dict


@app.get("/v1/health")
def health():
    return {"status": "ok", "version": TOOL_VERSION}


@app.get("/v1/commands")
def commands():
    return {"commands": list(COMMANDS)}


def _config_from_request(req: TaskRequest) -> TaskConfig:
    try:
        field = parse_field_flag(req.field)
    except InputError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return TaskConfig(
        command=req.command,
        inputs=list(req.inputs),
        field=field,
        weight_bound=req.weight_bound,
        arity_bound=req.arity_bound,
        d_max=req.d_max,
        witness_bound=req.witness_bound,
        degree_range=tuple(req.degrees) if req.degrees else None,
        kind=req.kind,
        seed=req.seed,
    )


@app.post("/v1/run", response_model=TaskResponse)
def run(req: TaskRequest) -> TaskResponse:
    config = _config_from_request(req)
    report = run_task(config)
    return TaskResponse(
        command=report.command,
        verdict=report.verdict,
        exit_code=report.exit_code,
        report=report.payload(),
    )
