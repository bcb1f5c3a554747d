# solver/adapters/highs.py
"""
scipy.optimize.milp (HiGHS) 轉接：可在進程內使用，也可作為外部求解器命令

用法:
    python -m solver.adapters.highs {mps} {sol} [{time_limit}]
"""
import os
import sys
# 以腳本路徑執行時將項目根目錄添加到 Python 路徑
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

import math
import time
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from config.constants import DEFAULT_MIP_GAP
from core.enums import SolveStatus
from solver.result import SolveResult
from transcription.model import MilpModel
from utils.logging import get_logger

logger = get_logger(__name__)

# scipy.optimize.milp 的 status 代碼
_STATUS = {
    0: SolveStatus.OPTIMAL,
    1: SolveStatus.LIMIT,
    2: SolveStatus.INFEASIBLE,
    3: SolveStatus.UNBOUNDED,
}


def solve_scipy(model: MilpModel, time_limit: Optional[float] = None,
                mip_rel_gap: float = DEFAULT_MIP_GAP) -> SolveResult:
    """
    以 scipy.optimize.milp 求解

    參數:
        time_limit: 時間上限 (秒)
        mip_rel_gap: 相對 MIP 間隙，預設 0.01%
    """
    arrays = model.to_arrays()
    constraints = []
    if model.n_constraints:
        constraints.append(LinearConstraint(arrays.A, arrays.row_lower, arrays.row_upper))
    options = {'disp': False, 'mip_rel_gap': mip_rel_gap}
    if time_limit is not None:
        options['time_limit'] = float(time_limit)

    start_time = time.time()
    res = milp(arrays.c, constraints=constraints, integrality=arrays.integrality,
               bounds=Bounds(arrays.lower, arrays.upper), options=options)
    runtime = time.time() - start_time

    status = _STATUS.get(res.status)
    if status is None:
        status = SolveStatus.LIMIT
        logger.warning(f"HiGHS 回傳非預期狀態 {res.status}: {res.message}")
    assignment = {}
    objective = None
    if res.x is not None:
        x = np.where(arrays.integrality.astype(bool), np.round(res.x), res.x)
        assignment = {var.name: float(v) for var, v in zip(model.variables, x)}
        objective = float(res.fun)
    gap = getattr(res, 'mip_gap', None)
    gap = 0.0 if gap is None or not math.isfinite(gap) else float(gap)
    result = SolveResult(status, objective, assignment, gap=gap, runtime=runtime, backend='scipy',
                         nodes=int(getattr(res, 'mip_node_count', 0) or 0), message=str(res.message))
    logger.info(result.summary())
    return result


def main(argv=None) -> int:
    from solver.external import write_solution
    from solver.mps import read_mps

    args = list(sys.argv[1:] if argv is None else argv)
    if len(args) not in (2, 3):
        print("用法: python -m solver.adapters.highs MPS_PATH SOL_PATH [TIME_LIMIT]", file=sys.stderr)
        return 1
    mps_path, sol_path = args[0], args[1]
    time_limit = None
    if len(args) == 3 and args[2].lower() not in ('none', 'inf', ''):
        time_limit = float(args[2])
    model = read_mps(mps_path)
    result = solve_scipy(model, time_limit=time_limit)
    write_solution(sol_path, result)
    return 0


if __name__ == '__main__':
    sys.exit(main())
