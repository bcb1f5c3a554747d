"""
自由格式 MPS 讀寫

欄位依 var_index 順序輸出，整數欄位包在 INTORG/INTEND 標記內；浮點數以 repr 輸出，
因此 read_mps(write_mps(model)) 在結構上等於原模型。
"""
import math
import os
from typing import Dict, List, Tuple

from core.enums import Sense, VarKind
from core.errors import SolverError
from transcription.model import MilpModel
from utils.file_lock_manager import file_lock_manager
from utils.logging import get_logger

logger = get_logger(__name__)

OBJECTIVE_ROW = 'OBJ'


def _num(value: float) -> str:
    return repr(float(value))


def mps_lines(model: MilpModel) -> List[str]:
    names = model.names()
    lines = [f"NAME {model.name}", "ROWS", f" N  {OBJECTIVE_ROW}"]
    for row in model.constraints:
        lines.append(f" {row.sense.value}  {row.name}")

    by_column: Dict[int, List[Tuple[str, float]]] = {}
    for row in model.constraints:
        for j, coef in row.terms:
            by_column.setdefault(j, []).append((row.name, coef))

    lines.append("COLUMNS")
    in_marker = False
    for j, var in enumerate(model.variables):
        if var.kind.is_integral and not in_marker:
            lines.append("    MARKER  'MARKER'  'INTORG'")
            in_marker = True
        elif not var.kind.is_integral and in_marker:
            lines.append("    MARKER  'MARKER'  'INTEND'")
            in_marker = False
        entries = []
        if j in model.objective:
            entries.append((OBJECTIVE_ROW, model.objective[j]))
        entries.extend(by_column.get(j, []))
        if not entries:
            # 空欄位仍須宣告
            entries.append((OBJECTIVE_ROW, 0.0))
        for row_name, coef in entries:
            lines.append(f"    {names[j]}  {row_name}  {_num(coef)}")
    if in_marker:
        lines.append("    MARKER  'MARKER'  'INTEND'")

    lines.append("RHS")
    for row in model.constraints:
        if row.rhs != 0.0:
            lines.append(f"    RHS  {row.name}  {_num(row.rhs)}")

    ranged = [row for row in model.constraints if row.range is not None]
    if ranged:
        lines.append("RANGES")
        for row in ranged:
            lines.append(f"    RNG  {row.name}  {_num(row.range)}")

    lines.append("BOUNDS")
    for var in model.variables:
        lines.extend(_bound_lines(var))
    lines.append("ENDATA")
    return lines


def _bound_lines(var) -> List[str]:
    name, lo, up = var.name, var.lower, var.upper
    if var.kind is VarKind.BINARY:
        out = [f" BV BND  {name}"]
        if lo != 0.0:
            out.append(f" LO BND  {name}  {_num(lo)}")
        if up != 1.0:
            out.append(f" UP BND  {name}  {_num(up)}")
        return out
    if lo == up:
        return [f" FX BND  {name}  {_num(lo)}"]
    if lo == -math.inf and up == math.inf:
        return [f" FR BND  {name}"]
    out = []
    if lo == -math.inf:
        out.append(f" MI BND  {name}")
    elif lo != 0.0 or var.kind.is_integral:
        out.append(f" LO BND  {name}  {_num(lo)}")
    if up != math.inf:
        out.append(f" UP BND  {name}  {_num(up)}")
    elif var.kind.is_integral:
        out.append(f" PL BND  {name}")
    return out


def write_mps(model: MilpModel, path: str) -> str:
    """
    寫出自由格式 MPS 檔

    參數:
        model: 已通過 validate 的模型
        path: 輸出路徑

    返回:
        path
    """
    model.validate()
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    text = '\n'.join(mps_lines(model)) + '\n'
    with file_lock_manager.get_lock(path):
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
    logger.debug(f"MPS 已寫出: {path} ({model.n_constraints} 列, {model.n_vars} 欄)")
    return path


def read_mps(path: str) -> MilpModel:
    """讀取自由格式 MPS 檔 (僅支援最小化與本模組寫出的區段)"""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            raw_lines = handle.read().splitlines()
    except OSError as e:
        raise SolverError(f"無法讀取 MPS 檔 {path}: {e}") from e

    name = 'model'
    section = None
    objective_row = None
    row_order: List[Tuple[str, Sense]] = []
    columns: List[str] = []
    kinds: Dict[str, VarKind] = {}
    entries: Dict[str, List[Tuple[str, float]]] = {}
    objective: Dict[str, float] = {}
    rhs: Dict[str, float] = {}
    ranges: Dict[str, float] = {}
    bounds: Dict[str, List[float]] = {}
    integral = False

    def fail(number: int, message: str):
        raise SolverError(f"{path}:{number}: {message}")

    for number, raw in enumerate(raw_lines, start=1):
        line = raw.strip()
        if not line or line.startswith('*'):
            continue
        tokens = line.split()
        if not raw[0].isspace():
            keyword = tokens[0].upper()
            if keyword == 'NAME':
                name = tokens[1] if len(tokens) > 1 else name
                continue
            if keyword == 'ENDATA':
                break
            if keyword == 'OBJSENSE':
                if len(tokens) > 1 and tokens[1].upper().startswith('MAX'):
                    fail(number, "不支援最大化模型")
                section = 'OBJSENSE'
                continue
            if keyword not in ('ROWS', 'COLUMNS', 'RHS', 'RANGES', 'BOUNDS'):
                fail(number, f"未知區段 {keyword}")
            section = keyword
            continue

        if section == 'OBJSENSE':
            if tokens[0].upper().startswith('MAX'):
                fail(number, "不支援最大化模型")
        elif section == 'ROWS':
            code, row_name = tokens[0].upper(), tokens[1]
            if code == 'N':
                if objective_row is None:
                    objective_row = row_name
                continue
            try:
                row_order.append((row_name, Sense(code)))
            except ValueError:
                fail(number, f"未知的列類型 {code}")
        elif section == 'COLUMNS':
            if len(tokens) >= 3 and tokens[1].strip("'") == 'MARKER':
                marker = tokens[2].strip("'")
                integral = marker == 'INTORG'
                continue
            column = tokens[0]
            if column not in kinds:
                columns.append(column)
                kinds[column] = VarKind.INTEGER if integral else VarKind.CONTINUOUS
                entries[column] = []
            pairs = tokens[1:]
            if len(pairs) % 2:
                fail(number, "COLUMNS 行格式錯誤")
            for row_name, value in zip(pairs[::2], pairs[1::2]):
                if row_name == objective_row:
                    objective[column] = objective.get(column, 0.0) + float(value)
                else:
                    entries[column].append((row_name, float(value)))
        elif section in ('RHS', 'RANGES'):
            pairs = tokens[1:] if len(tokens) % 2 else tokens
            target = rhs if section == 'RHS' else ranges
            for row_name, value in zip(pairs[::2], pairs[1::2]):
                if row_name != objective_row:
                    target[row_name] = float(value)
        elif section == 'BOUNDS':
            code, column = tokens[0].upper(), tokens[2]
            if column not in kinds:
                fail(number, f"BOUNDS 引用了未宣告的欄位 {column}")
            value = float(tokens[3]) if len(tokens) > 3 else None
            lo, up = bounds.setdefault(column, [0.0, math.inf])
            if code == 'BV':
                kinds[column] = VarKind.BINARY
                lo, up = 0.0, 1.0
            elif code == 'LO':
                lo = value
            elif code == 'UP':
                up = value
            elif code == 'FX':
                lo = up = value
            elif code == 'FR':
                lo, up = -math.inf, math.inf
            elif code == 'MI':
                lo = -math.inf
            elif code == 'PL':
                up = math.inf
            else:
                fail(number, f"未知的界限類型 {code}")
            bounds[column] = [lo, up]
        else:
            fail(number, "資料行不在任何區段內")

    model = MilpModel(name=name)
    for column in columns:
        lo, up = bounds.get(column, [0.0, math.inf])
        if kinds[column] is VarKind.BINARY and column not in bounds:
            lo, up = 0.0, 1.0
        model.add_var(column, kinds[column], lo, up)
    row_terms: Dict[str, List[Tuple[str, float]]] = {row_name: [] for row_name, _ in row_order}
    for column in columns:
        for row_name, value in entries[column]:
            if row_name not in row_terms:
                raise SolverError(f"{path}: 欄位 {column} 引用了未宣告的列 {row_name}")
            row_terms[row_name].append((column, value))
    for row_name, sense in row_order:
        model.add_constraint(row_name, row_terms[row_name], sense, rhs.get(row_name, 0.0), ranges.get(row_name))
    model.set_objective(objective)
    return model
