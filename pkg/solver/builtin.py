"""
內建精確求解器：稠密兩階段單純形法 (Bland 規則) 加深度優先分支定界

僅供微型模型與測試基準使用，規模以 MAX_VARIABLES / MAX_INTEGERS 限制。
"""
from dataclasses import dataclass
import itertools
import math
import time
from typing import List, Optional, Tuple

import numpy as np

from config.constants import INTEGRALITY_TOL
from core.enums import SolveStatus
from core.errors import SolverLimitError
from solver.result import SolveResult
from transcription.model import MilpModel
from utils.logging import get_logger

logger = get_logger(__name__)

MAX_VARIABLES = 500
MAX_INTEGERS = 60
PIVOT_TOL = 1e-9
PHASE_ONE_TOL = 1e-7
ABS_GAP = 1e-9
MAX_PIVOTS = 50_000
MAX_NODES = 200_000
MAX_ENUMERATION = 1 << 16


@dataclass(frozen=True)
class SolverLimits:
    max_variables: int = MAX_VARIABLES
    max_integers: int = MAX_INTEGERS
    max_pivots: int = MAX_PIVOTS
    max_nodes: int = MAX_NODES


@dataclass(frozen=True)
class LpSolution:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    objective: float = math.inf
    pivots: int = 0


class _DenseLp:
    """min c·x, row_lower ≤ A x ≤ row_upper, lower ≤ x ≤ upper 的稠密表示"""

    def __init__(self, model: MilpModel):
        arrays = model.to_arrays()
        self.c = arrays.c
        self.A = arrays.A.toarray()
        self.row_lower = arrays.row_lower
        self.row_upper = arrays.row_upper
        self.lower = arrays.lower
        self.upper = arrays.upper
        self.integrality = arrays.integrality.astype(bool)


def _pivot(T: np.ndarray, r: int, k: int) -> None:
    T[r] /= T[r, k]
    column = T[:, k].copy()
    column[r] = 0.0
    T -= np.outer(column, T[r])


def _run_simplex(T: np.ndarray, basis: List[int], n_allowed: int, max_pivots: int) -> Tuple[SolveStatus, int]:
    """在表格 T 上以 Bland 規則迭代至最優或無界，T 最後一列為化簡成本"""
    pivots = 0
    m = T.shape[0] - 1
    while True:
        costs = T[-1, :n_allowed]
        candidates = np.flatnonzero(costs < -PIVOT_TOL)
        if candidates.size == 0:
            return SolveStatus.OPTIMAL, pivots
        k = int(candidates[0])
        column = T[:m, k]
        positive = np.flatnonzero(column > PIVOT_TOL)
        if positive.size == 0:
            return SolveStatus.UNBOUNDED, pivots
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, k)
        basis[r] = k
        pivots += 1
        if pivots > max_pivots:
            raise SolverLimitError(f"單純形法超過 {max_pivots} 次樞軸")


def solve_lp_arrays(c, A, row_lower, row_upper, lower, upper, max_pivots: int = MAX_PIVOTS) -> LpSolution:
    """
    以兩階段單純形法求解 LP

    變數先平移/鏡射為非負變數 (自由變數拆成兩個)，有限上界與列約束加上鬆弛變數成為等式，
    右側為負的列乘以 −1，再為每列加入人工變數。
    """
    n = c.size
    if np.any(lower > upper + PIVOT_TOL):
        return LpSolution(SolveStatus.INFEASIBLE)

    # x = shift + P·y, y ≥ 0
    shift = np.zeros(n)
    transform_cols = []  # (原變數索引, 係數)
    bound_rows = []      # (y 欄位索引, 上限)
    for j in range(n):
        lo, up = lower[j], upper[j]
        if math.isfinite(lo):
            shift[j] = lo
            transform_cols.append((j, 1.0))
            if math.isfinite(up):
                bound_rows.append((len(transform_cols) - 1, up - lo))
        elif math.isfinite(up):
            shift[j] = up
            transform_cols.append((j, -1.0))
        else:
            transform_cols.append((j, 1.0))
            transform_cols.append((j, -1.0))
    n_y = len(transform_cols)
    P = np.zeros((n, n_y))
    for col, (j, sign) in enumerate(transform_cols):
        P[j, col] = sign

    AP = A @ P if A.size else np.zeros((0, n_y))
    offset = A @ shift if A.size else np.zeros(0)
    # (係數, 方向, 右側)：方向 0 為等式，1 為 ≤，-1 為 ≥
    entries = []
    for i in range(A.shape[0]):
        lo, up = row_lower[i] - offset[i], row_upper[i] - offset[i]
        if lo == up:
            entries.append((AP[i], 0, lo))
            continue
        if math.isfinite(lo):
            entries.append((AP[i], -1, lo))
        if math.isfinite(up):
            entries.append((AP[i], 1, up))
    for col, cap in bound_rows:
        row = np.zeros(n_y)
        row[col] = 1.0
        entries.append((row, 1, cap))
    rows = [e[0] for e in entries]
    senses = [e[1] for e in entries]
    rhs = [e[2] for e in entries]

    cost = c @ P
    constant = float(c @ shift)
    m = len(rows)
    if m == 0:
        if np.any(cost < -PIVOT_TOL):
            return LpSolution(SolveStatus.UNBOUNDED)
        return LpSolution(SolveStatus.OPTIMAL, shift.copy(), constant, 0)

    n_slack = sum(1 for s in senses if s != 0)
    n_cols = n_y + n_slack
    body = np.zeros((m, n_cols))
    b = np.array(rhs, dtype=float)
    slack = n_y
    for i, (row, sense) in enumerate(zip(rows, senses)):
        body[i, :n_y] = row
        if sense == 1:
            body[i, slack] = 1.0
            slack += 1
        elif sense == -1:
            body[i, slack] = -1.0
            slack += 1
    negative = b < 0
    body[negative] *= -1.0
    b[negative] *= -1.0

    # 第一階段：每列一個人工變數
    T = np.zeros((m + 1, n_cols + m + 1))
    T[:m, :n_cols] = body
    T[:m, n_cols:n_cols + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n_cols] = -body.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n_cols, n_cols + m))
    _, pivots = _run_simplex(T, basis, n_cols + m, max_pivots)
    if -T[-1, -1] > PHASE_ONE_TOL * max(1.0, float(np.abs(b).max())):
        return LpSolution(SolveStatus.INFEASIBLE, pivots=pivots)

    # 將殘留在基底中的人工變數換出，無法換出的列為冗餘列
    keep = []
    for r in range(m):
        if basis[r] >= n_cols:
            candidates = np.flatnonzero(np.abs(T[r, :n_cols]) > PIVOT_TOL)
            if candidates.size == 0:
                continue
            k = int(candidates[0])
            _pivot(T, r, k)
            basis[r] = k
        keep.append(r)

    # 第二階段
    T2 = np.zeros((len(keep) + 1, n_cols + 1))
    T2[:-1, :n_cols] = T[keep, :n_cols]
    T2[:-1, -1] = T[keep, -1]
    basis2 = [basis[r] for r in keep]
    full_cost = np.zeros(n_cols)
    full_cost[:n_y] = cost
    c_b = full_cost[basis2]
    T2[-1, :n_cols] = full_cost - c_b @ T2[:-1, :n_cols]
    T2[-1, -1] = -c_b @ T2[:-1, -1]
    status, more = _run_simplex(T2, basis2, n_cols, max_pivots)
    pivots += more
    if status is SolveStatus.UNBOUNDED:
        return LpSolution(status, pivots=pivots)

    y_full = np.zeros(n_cols)
    for r, var in enumerate(basis2):
        y_full[var] = T2[r, -1]
    x = shift + P @ y_full[:n_y]
    return LpSolution(SolveStatus.OPTIMAL, x, float(c @ x), pivots)


def _check_size(model: MilpModel, limits: SolverLimits) -> None:
    stats = model.stats()
    if stats.variables > limits.max_variables or stats.integers > limits.max_integers:
        raise SolverLimitError(f"模型規模 ({stats.variables} 變數, {stats.integers} 整數) 超過內建求解器上限 "
                               f"({limits.max_variables} 變數, {limits.max_integers} 整數)")


def _assignment(model: MilpModel, x: np.ndarray, integral: np.ndarray) -> dict:
    values = np.where(integral, np.round(x), x)
    return {var.name: float(v) for var, v in zip(model.variables, values)}


def solve_builtin(model: MilpModel, limits: Optional[SolverLimits] = None) -> SolveResult:
    """
    深度優先分支定界，分支於最不整數的變數

    返回:
        SolveResult；OPTIMAL 時 gap 為 0 (絕對間隙 1e-9 內)
    異常:
        SolverLimitError: 規模超過上限或單純形法樞軸次數超過上限
    """
    limits = limits or SolverLimits()
    _check_size(model, limits)
    start_time = time.time()
    lp = _DenseLp(model)
    integral = lp.integrality

    incumbent_x, incumbent_obj = None, math.inf
    nodes = 0
    root_unbounded = False
    unbounded_nodes = 0
    stack = [(lp.lower.copy(), lp.upper.copy())]
    while stack:
        nodes += 1
        if nodes > limits.max_nodes:
            logger.warning(f"分支定界達到節點上限 {limits.max_nodes}")
            status = SolveStatus.LIMIT
            break
        lower, upper = stack.pop()
        relax = solve_lp_arrays(lp.c, lp.A, lp.row_lower, lp.row_upper, lower, upper, limits.max_pivots)
        if relax.status is SolveStatus.UNBOUNDED:
            if nodes == 1:
                root_unbounded = True
                break
            unbounded_nodes += 1
            continue
        if relax.status is not SolveStatus.OPTIMAL or relax.objective >= incumbent_obj - ABS_GAP:
            continue
        x = relax.x
        fractional = np.abs(x - np.round(x))
        fractional[~integral] = 0.0
        j = int(np.argmax(fractional))
        if fractional[j] <= INTEGRALITY_TOL:
            incumbent_x, incumbent_obj = x, relax.objective
            continue
        down_upper = upper.copy()
        down_upper[j] = math.floor(x[j])
        up_lower = lower.copy()
        up_lower[j] = math.ceil(x[j])
        # 先探索較接近的一側
        children = [(lower, down_upper), (up_lower, upper)]
        if x[j] - math.floor(x[j]) >= 0.5:
            children.reverse()
        stack.extend(reversed(children))
    else:
        status = SolveStatus.OPTIMAL

    runtime = time.time() - start_time
    if root_unbounded:
        return SolveResult(SolveStatus.UNBOUNDED, runtime=runtime, backend='builtin', nodes=nodes)
    if unbounded_nodes:
        message = f"{unbounded_nodes} 個子節點的 LP 鬆弛無界"
        logger.warning(f"內建求解: {message}")
        return SolveResult(SolveStatus.UNBOUNDED, runtime=runtime, backend='builtin', nodes=nodes,
                           message=message)
    if incumbent_x is None:
        final = SolveStatus.LIMIT if status is SolveStatus.LIMIT else SolveStatus.INFEASIBLE
        return SolveResult(final, runtime=runtime, backend='builtin', nodes=nodes)
    assignment = _assignment(model, incumbent_x, integral)
    logger.debug(f"內建求解完成: {nodes} 個節點，目標 {incumbent_obj:.8g}，耗時 {runtime:.2f}秒")
    return SolveResult(status, model.objective_value(assignment), assignment,
                       gap=0.0 if status is SolveStatus.OPTIMAL else math.inf,
                       runtime=runtime, backend='builtin', nodes=nodes)


def solve_enumeration(model: MilpModel, limits: Optional[SolverLimits] = None) -> SolveResult:
    """
    窮舉所有整數變數取值，逐一求解 LP，作為分支定界的測試基準

    整數變數必須有有限界限，葉節點數不超過 65536
    """
    limits = limits or SolverLimits()
    _check_size(model, limits)
    start_time = time.time()
    lp = _DenseLp(model)
    integers = np.flatnonzero(lp.integrality)
    ranges = []
    leaves = 1
    for j in integers:
        lo, up = lp.lower[j], lp.upper[j]
        if not (math.isfinite(lo) and math.isfinite(up)):
            raise SolverLimitError(f"窮舉需要有限界限: {model.variables[j].name}")
        values = range(int(math.ceil(lo - INTEGRALITY_TOL)), int(math.floor(up + INTEGRALITY_TOL)) + 1)
        ranges.append(values)
        leaves *= max(1, len(values))
    if leaves > MAX_ENUMERATION:
        raise SolverLimitError(f"窮舉葉節點數 {leaves} 超過上限 {MAX_ENUMERATION}")

    best_x, best_obj = None, math.inf
    unbounded = False
    for combo in itertools.product(*ranges):
        lower, upper = lp.lower.copy(), lp.upper.copy()
        lower[integers] = combo
        upper[integers] = combo
        relax = solve_lp_arrays(lp.c, lp.A, lp.row_lower, lp.row_upper, lower, upper, limits.max_pivots)
        if relax.status is SolveStatus.UNBOUNDED:
            unbounded = True
            break
        if relax.status is SolveStatus.OPTIMAL and relax.objective < best_obj:
            best_x, best_obj = relax.x, relax.objective

    runtime = time.time() - start_time
    if unbounded:
        return SolveResult(SolveStatus.UNBOUNDED, runtime=runtime, backend='enumeration', nodes=leaves)
    if best_x is None:
        return SolveResult(SolveStatus.INFEASIBLE, runtime=runtime, backend='enumeration', nodes=leaves)
    assignment = _assignment(model, best_x, lp.integrality)
    return SolveResult(SolveStatus.OPTIMAL, model.objective_value(assignment), assignment,
                       runtime=runtime, backend='enumeration', nodes=leaves)


def solve_lp(model: MilpModel) -> SolveResult:
    """僅求解 LP 鬆弛 (忽略整數性)"""
    start_time = time.time()
    lp = _DenseLp(model)
    relax = solve_lp_arrays(lp.c, lp.A, lp.row_lower, lp.row_upper, lp.lower, lp.upper)
    runtime = time.time() - start_time
    if relax.status is not SolveStatus.OPTIMAL:
        return SolveResult(relax.status, runtime=runtime, backend='lp')
    assignment = {var.name: float(v) for var, v in zip(model.variables, relax.x)}
    return SolveResult(SolveStatus.OPTIMAL, relax.objective, assignment, runtime=runtime, backend='lp', nodes=1)
