"""實驗中單一 (參數組, 建模選項) 組合的建模與求解，可在工作進程中執行"""
from dataclasses import dataclass, field
import math
import time
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from core.context import PlanningContext
from core.domain import ParamBundle, TimeGrid
from core.enums import ProcessingMode
from core.errors import ChemoPlanError
from solver.backends import get_backend
from transcription.chance import build_model
from transcription.options import BuildOptions
from utils.concurrency import run_indexed
from utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SolveTask:
    label: str
    bundle: ParamBundle
    options: BuildOptions = field(default_factory=BuildOptions)
    grid: Optional[TimeGrid] = None
    backend: str = 'builtin'
    time_limit: Optional[float] = None
    solver_config: Dict[str, Any] = field(default_factory=dict)


def empty_row(label: str) -> Dict[str, Any]:
    return {'config': label, 'status': 'error', 'objective': math.nan, 'runtime': math.nan, 'gap': math.nan,
            'constraints': 0, 'variables': 0, 'integers': 0, 'binaries': 0, 'error': ''}


def run_task(task: SolveTask) -> Dict[str, Any]:
    """
    建模並求解，錯誤記錄在列中而不拋出

    返回:
        {config, status, objective, runtime, gap, constraints, variables, integers, binaries, error}
    """
    row = empty_row(task.label)
    start_time = time.time()
    try:
        model = build_model(task.bundle, task.grid, task.options)
        stats = model.stats()
        row.update(constraints=stats.constraints, variables=stats.variables,
                   integers=stats.integers, binaries=stats.binaries)
        backend = get_backend(task.backend, PlanningContext(**task.solver_config))
        result = backend.solve(model, task.time_limit)
        row.update(status=result.status.value, runtime=result.runtime, gap=result.gap)
        if result.objective is not None:
            row['objective'] = result.objective
        if result.violations:
            row['error'] = f"{len(result.violations)} 項可行性違反: {result.violations[0]}"
    except (ChemoPlanError, ValueError) as e:
        row.update(error=f"{type(e).__name__}: {e}", runtime=time.time() - start_time)
        logger.error(f"[{task.label}] 失敗: {e}")
    return row


def run_tasks(tasks: Sequence[SolveTask], mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
              max_workers: Optional[int] = None, context: Optional[PlanningContext] = None,
              label: str = '求解') -> pd.DataFrame:
    """
    依序或並行執行多個求解任務，結果按輸入順序排列

    外部求解器以線程池執行 (子進程本身即為工作單位)，其餘後端以進程池執行
    """
    task_type = 'io' if any(t.backend == 'external' for t in tasks) else 'cpu'
    outcomes = run_indexed(run_task, list(tasks), mode=mode, max_workers=max_workers,
                           task_type=task_type, label=label)
    rows: List[Dict[str, Any]] = []
    for task, outcome in zip(tasks, outcomes):
        if outcome.ok:
            row = outcome.value
        else:
            row = empty_row(task.label)
            row['error'] = outcome.error_info['error_message']
        if context is not None:
            if row.get('status') == 'error':
                context.stats.record_error(outcome.error_info['error_type'] if not outcome.ok else 'SolveError')
            else:
                context.stats.task_done()
        rows.append(row)
        logger.info(f"{label}進度: {len(rows)}/{len(tasks)} [{row['config']}] 狀態={row.get('status')}")
    return pd.DataFrame(rows)
