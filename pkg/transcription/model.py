"""
MILP 模型容器：變數、約束、目標與名稱索引

模型一律為最小化；約束的係數以欄位索引排序，兩個以相同順序建立的模型可直接比較結構是否相等。
"""
from dataclasses import dataclass, field
import math
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from core.enums import Sense, VarKind
from core.errors import ModelBuildError

Terms = Union[Mapping[str, float], Iterable[Tuple[str, float]]]


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class Constraint:
    """
    線性約束 Σ a_j x_j (sense) rhs

    range 不為 None 時為區間約束，語義同 MPS 的 RANGES：
    G 列 [rhs, rhs+|R|]，L 列 [rhs−|R|, rhs]，E 列依 R 的正負向上或向下延伸
    """
    name: str
    terms: Tuple[Tuple[int, float], ...]
    sense: Sense
    rhs: float
    range: Optional[float] = None

    def bounds(self) -> Tuple[float, float]:
        """列的活動區間 [lo, hi]"""
        if self.range is None:
            if self.sense is Sense.LE:
                return -math.inf, self.rhs
            if self.sense is Sense.GE:
                return self.rhs, math.inf
            return self.rhs, self.rhs
        width = abs(self.range)
        if self.sense is Sense.GE:
            return self.rhs, self.rhs + width
        if self.sense is Sense.LE:
            return self.rhs - width, self.rhs
        return (self.rhs, self.rhs + width) if self.range >= 0 else (self.rhs - width, self.rhs)


class ModelStats(NamedTuple):
    constraints: int
    variables: int
    integers: int  # 含二元變數
    binaries: int


class ModelArrays(NamedTuple):
    """矩陣形式 min c·x, row_lower ≤ A x ≤ row_upper, lower ≤ x ≤ upper"""
    c: np.ndarray
    A: sparse.csr_matrix
    row_lower: np.ndarray
    row_upper: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray  # 1 表示整數/二元


@dataclass(eq=False)
class MilpModel:
    name: str = 'chemo'
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: Dict[int, float] = field(default_factory=dict)
    var_index: Dict[str, int] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self._row_names = {c.name for c in self.constraints}

    # ---- 建構 ----

    def add_var(self, name: str, kind: VarKind = VarKind.CONTINUOUS,
                lower: float = 0.0, upper: float = math.inf) -> int:
        if name in self.var_index:
            raise ModelBuildError(f"變數名稱重複: {name}")
        if kind is VarKind.BINARY:
            lower, upper = max(0.0, lower), min(1.0, upper)
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ModelBuildError(f"變數 {name} 的界限不合法: [{lower}, {upper}]")
        index = len(self.variables)
        self.variables.append(Variable(name, kind, lower, upper))
        self.var_index[name] = index
        return index

    def fix(self, name: str, value: float) -> None:
        """將變數上下界同時設為 value"""
        index = self.var_index[name]
        self.variables[index] = Variable(name, self.variables[index].kind, float(value), float(value))

    def _collect(self, terms: Terms, owner: str) -> Tuple[Tuple[int, float], ...]:
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: Dict[int, float] = {}
        for var_name, coef in items:
            index = self.var_index.get(var_name)
            if index is None:
                raise ModelBuildError(f"{owner} 引用了不存在的變數 {var_name}")
            merged[index] = merged.get(index, 0.0) + float(coef)
        return tuple(sorted((i, a) for i, a in merged.items() if a != 0.0))

    def add_constraint(self, name: str, terms: Terms, sense: Sense, rhs: float,
                       range: Optional[float] = None) -> int:
        if name in self._row_names:
            raise ModelBuildError(f"約束名稱重複: {name}")
        row = Constraint(name, self._collect(terms, name), sense, float(rhs),
                         None if range is None else float(range))
        self.constraints.append(row)
        self._row_names.add(name)
        return len(self.constraints) - 1

    def set_objective(self, terms: Terms) -> None:
        self.objective = dict(self._collect(terms, 'objective'))

    # ---- 查詢 ----

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def names(self) -> List[str]:
        return [v.name for v in self.variables]

    def integer_indices(self) -> List[int]:
        return [i for i, v in enumerate(self.variables) if v.kind.is_integral]

    def stats(self) -> ModelStats:
        integers = sum(1 for v in self.variables if v.kind.is_integral)
        binaries = sum(1 for v in self.variables if v.kind is VarKind.BINARY)
        return ModelStats(self.n_constraints, self.n_vars, integers, binaries)

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return float(sum(coef * assignment[self.variables[i].name] for i, coef in self.objective.items()))

    def validate(self) -> None:
        """檢查名稱唯一、界限合法與約束引用"""
        if len(self.var_index) != len(self.variables):
            raise ModelBuildError("變數索引與變數列表不一致")
        for i, var in enumerate(self.variables):
            if self.var_index.get(var.name) != i:
                raise ModelBuildError(f"變數 {var.name} 的索引不一致")
            if var.lower > var.upper:
                raise ModelBuildError(f"變數 {var.name} 的界限不合法")
        names = set()
        for row in self.constraints:
            if row.name in names:
                raise ModelBuildError(f"約束名稱重複: {row.name}")
            names.add(row.name)
            for j, _ in row.terms:
                if not 0 <= j < self.n_vars:
                    raise ModelBuildError(f"約束 {row.name} 引用了不存在的欄位 {j}")
        for j in self.objective:
            if not 0 <= j < self.n_vars:
                raise ModelBuildError(f"目標函數引用了不存在的欄位 {j}")

    def to_arrays(self) -> ModelArrays:
        n = self.n_vars
        c = np.zeros(n)
        for j, coef in self.objective.items():
            c[j] = coef
        rows, cols, vals = [], [], []
        row_lower = np.empty(self.n_constraints)
        row_upper = np.empty(self.n_constraints)
        for i, row in enumerate(self.constraints):
            for j, coef in row.terms:
                rows.append(i)
                cols.append(j)
                vals.append(coef)
            row_lower[i], row_upper[i] = row.bounds()
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_constraints, n))
        lower = np.array([v.lower for v in self.variables])
        upper = np.array([v.upper for v in self.variables])
        integrality = np.array([1 if v.kind.is_integral else 0 for v in self.variables], dtype=int)
        return ModelArrays(c, A, row_lower, row_upper, lower, upper, integrality)

    def to_text(self, max_rows: Optional[int] = None) -> str:
        """人類可讀的約束列表，用於除錯"""
        names = self.names()

        def fmt(terms) -> str:
            parts = []
            for j, coef in terms:
                sign = '-' if coef < 0 else '+'
                parts.append(f"{sign} {abs(coef):.6g} {names[j]}")
            text = ' '.join(parts)
            return text[2:] if text.startswith('+ ') else text

        symbol = {Sense.LE: '<=', Sense.EQ: '=', Sense.GE: '>='}
        stats = self.stats()
        lines = [f"\\ {self.name}: {stats.constraints} 約束, {stats.variables} 變數 "
                 f"({stats.integers} 整數, {stats.binaries} 二元)",
                 "minimize", f"  obj: {fmt(sorted(self.objective.items())) or '0'}", "subject to"]
        rows = self.constraints if max_rows is None else self.constraints[:max_rows]
        for row in rows:
            if row.range is None:
                lines.append(f"  {row.name}: {fmt(row.terms)} {symbol[row.sense]} {row.rhs:.6g}")
            else:
                lo, hi = row.bounds()
                lines.append(f"  {row.name}: {lo:.6g} <= {fmt(row.terms)} <= {hi:.6g}")
        if max_rows is not None and self.n_constraints > max_rows:
            lines.append(f"  ... 另有 {self.n_constraints - max_rows} 條約束")
        lines.append("bounds")
        for var in self.variables:
            if var.lower == 0.0 and var.upper == math.inf and var.kind is VarKind.CONTINUOUS:
                continue
            lines.append(f"  {var.lower:.6g} <= {var.name} <= {var.upper:.6g}")
        for kind in (VarKind.INTEGER, VarKind.BINARY):
            members = [v.name for v in self.variables if v.kind is kind]
            if members:
                lines.append('general' if kind is VarKind.INTEGER else 'binary')
                lines.append('  ' + ' '.join(members))
        lines.append('end')
        return '\n'.join(lines)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MilpModel):
            return NotImplemented
        return (self.variables == other.variables and self.constraints == other.constraints
                and self.objective == other.objective)

    __hash__ = None
