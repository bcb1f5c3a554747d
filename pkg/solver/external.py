"""
外部求解器：寫出 MPS、以子進程執行命令模板、解析解檔

命令模板含 {mps} {sol} {time_limit} 佔位符，例如
    python -m solver.adapters.highs {mps} {sol} {time_limit}
解檔格式：每行 `變數名 值`，另有 `=obj= 值`、`=status= optimal|infeasible|unbounded|limit`、`=gap= 值`
"""
import math
import os
import shlex
import subprocess
import tempfile
import time
from typing import Dict, Optional, Tuple

from config.constants import DEFAULT_TIME_LIMIT, SOLVER_ENV_VAR
from core.enums import SolveStatus
from core.errors import SolverError
from solver.mps import write_mps
from solver.result import SolveResult
from transcription.model import MilpModel
from utils.logging import get_logger

logger = get_logger(__name__)

# 子進程超時前額外給求解器的緩衝秒數
TIMEOUT_GRACE = 30.0


def write_solution(path: str, result: SolveResult) -> None:
    """以解檔格式寫出結果 (供轉接腳本使用)"""
    lines = [f"=status= {result.status.value}"]
    if result.objective is not None:
        lines.append(f"=obj= {result.objective!r}")
    if math.isfinite(result.gap):
        lines.append(f"=gap= {result.gap!r}")
    lines.extend(f"{name} {value!r}" for name, value in result.assignment.items())
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')


def read_solution(path: str) -> Tuple[Optional[SolveStatus], Optional[float], float, Dict[str, float]]:
    """
    解析解檔

    返回:
        (狀態, 目標值, 間隙, 變數值)；未提供的欄位為 None
    """
    status, objective, gap = None, None, 0.0
    assignment: Dict[str, float] = {}
    with open(path, 'r', encoding='utf-8') as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise SolverError(f"{path}:{number}: 無法解析的解檔行: {line}")
            key, value = parts
            try:
                if key == '=status=':
                    status = SolveStatus(value.lower())
                elif key == '=obj=':
                    objective = float(value)
                elif key == '=gap=':
                    gap = float(value)
                else:
                    assignment[key] = float(value)
            except ValueError as e:
                raise SolverError(f"{path}:{number}: 無法解析的值 {value}") from e
    return status, objective, gap, assignment


def solve_external(model: MilpModel, command_template: Optional[str] = None,
                   time_limit: Optional[float] = None, workdir: Optional[str] = None) -> SolveResult:
    """
    以外部求解器求解

    參數:
        command_template: 命令模板，None 時讀取環境變數 CHEMO_SOLVER_CMD
        time_limit: 時間上限 (秒)，預設 7200
        workdir: 保留 MPS 與解檔的目錄，None 時使用暫存目錄

    返回:
        SolveResult；子進程超時時狀態為 LIMIT，若解檔已有可行解則一併回傳

    異常:
        SolverError: 缺少命令模板、子進程失敗或解檔無法解析
    """
    template = command_template or os.environ.get(SOLVER_ENV_VAR)
    if not template:
        raise SolverError(f"未指定外部求解器命令，請設定 {SOLVER_ENV_VAR} 或傳入 command_template")
    if '{mps}' not in template or '{sol}' not in template:
        raise SolverError(f"命令模板必須包含 {{mps}} 與 {{sol}} 佔位符: {template}")
    limit = DEFAULT_TIME_LIMIT if time_limit is None else float(time_limit)

    with tempfile.TemporaryDirectory(prefix='chemo_') as scratch:
        directory = workdir or scratch
        os.makedirs(directory, exist_ok=True)
        mps_path = os.path.join(directory, f"{model.name}.mps")
        sol_path = os.path.join(directory, f"{model.name}.sol")
        if os.path.exists(sol_path):
            os.remove(sol_path)
        write_mps(model, mps_path)
        command = template.format(mps=shlex.quote(mps_path), sol=shlex.quote(sol_path), time_limit=f"{limit:g}")
        logger.info(f"執行外部求解器: {command}")

        start_time = time.time()
        timed_out = False
        try:
            completed = subprocess.run(shlex.split(command), capture_output=True, text=True,
                                       timeout=limit + TIMEOUT_GRACE)
        except subprocess.TimeoutExpired:
            timed_out = True
            completed = None
        except OSError as e:
            raise SolverError(f"無法啟動外部求解器: {e}") from e
        runtime = time.time() - start_time

        if completed is not None and completed.returncode != 0:
            tail = (completed.stderr or completed.stdout or '').strip().splitlines()[-5:]
            raise SolverError(f"外部求解器結束碼 {completed.returncode}: {' | '.join(tail)}")
        if not os.path.exists(sol_path):
            if timed_out:
                logger.warning(f"外部求解器在 {limit:g} 秒內未完成且沒有解檔")
                return SolveResult(SolveStatus.LIMIT, runtime=runtime, backend='external', gap=math.inf)
            raise SolverError(f"外部求解器沒有產生解檔 {sol_path}")
        status, objective, gap, assignment = read_solution(sol_path)

    if timed_out:
        status = SolveStatus.LIMIT
    if status is None:
        if not assignment:
            raise SolverError("解檔中沒有狀態也沒有變數值")
        status = SolveStatus.OPTIMAL
    if assignment and objective is None:
        objective = model.objective_value(assignment) if all(v.name in assignment for v in model.variables) else None
    if status is SolveStatus.OPTIMAL:
        missing = [v.name for v in model.variables if v.name not in assignment]
        if missing:
            raise SolverError(f"最優解缺少 {len(missing)} 個變數，例如 {missing[0]}")
    result = SolveResult(status, objective, assignment, gap=gap, runtime=runtime, backend='external')
    logger.info(result.summary())
    return result
