"""
參數檔 (INI) 與情境檔 (CSV) 的讀寫

參數檔區段:
    [grid]            時間網格
    [tumor]           Gompertz 參數與初始狀態來源
    [celltype.N]      癌細胞類型
    [wbc]             白血球動態
    [drug.NAME]       藥物參數
"""
import configparser
import os
import re
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.domain import (CellType, DrugParams, ParamBundle, ScenarioSet, TimeGrid,
                         TumorParams, WbcParams)
from core.enums import Route
from core.errors import InvariantViolation, ParameterFileError
from utils.file_lock_manager import file_lock_manager
from utils.logging import get_logger

logger = get_logger(__name__)

_SECTION_RE = re.compile(r'^\s*\[([^\]]+)\]')
_KEY_RE = re.compile(r'^\s*([^#;\s\[][^=:]*?)\s*[=:]')


def _line_map(text: str) -> Dict[Tuple[str, str], int]:
    """(區段, 鍵) → 行號 (從 1 起算)；區段標題本身以鍵 '' 記錄"""
    mapping = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_RE.match(line)
        if header:
            section = header.group(1).strip()
            mapping[(section, '')] = lineno
            continue
        key = _KEY_RE.match(line)
        if key and section is not None:
            mapping[(section, key.group(1).strip().lower())] = lineno
    return mapping


class IniReader:
    """帶行號錯誤回報的 INI 讀取器"""

    def __init__(self, path: str):
        self.path = path
        try:
            with open(path, encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise ParameterFileError(f"無法讀取參數檔: {e}", path)

        self.parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'), interpolation=None)
        try:
            self.parser.read_string(text, source=path)
        except configparser.MissingSectionHeaderError as e:
            raise ParameterFileError("缺少區段標題", path, e.lineno)
        except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
            raise ParameterFileError(e.message.split(': ', 1)[-1], path, e.lineno)
        except configparser.ParsingError as e:
            line = e.errors[0][0] if e.errors else None
            raise ParameterFileError("無法解析的行", path, line)
        self.lines = _line_map(text)

    def error(self, section: str, key: str, message: str) -> ParameterFileError:
        line = self.lines.get((section, key.lower()), self.lines.get((section, '')))
        return ParameterFileError(f"[{section}] {key}: {message}", self.path, line)

    def sections(self, prefix: str) -> List[str]:
        return [s for s in self.parser.sections() if s.startswith(prefix)]

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key) and self.parser.get(section, key).strip() != ''

    def raw(self, section: str, key: str) -> str:
        if not self.parser.has_section(section):
            raise ParameterFileError(f"缺少區段 [{section}]", self.path)
        if not self.has(section, key):
            raise self.error(section, key, "缺少必要鍵")
        return self.parser.get(section, key).strip()

    def get_text(self, section: str, key: str, default: Optional[str] = None) -> Optional[str]:
        if default is not None and not self.has(section, key):
            return default
        return self.raw(section, key)

    def get_float(self, section: str, key: str, default: Optional[float] = None) -> float:
        if default is not None and not self.has(section, key):
            return default
        value = self.raw(section, key)
        try:
            return float(value)
        except ValueError:
            raise self.error(section, key, f"不是數值: {value!r}")

    def get_int(self, section: str, key: str, default: Optional[int] = None) -> int:
        if default is not None and not self.has(section, key):
            return default
        value = self.raw(section, key)
        try:
            return int(value)
        except ValueError:
            raise self.error(section, key, f"不是整數: {value!r}")

    def get_floats(self, section: str, key: str) -> Tuple[float, ...]:
        value = self.raw(section, key)
        try:
            return tuple(float(v) for v in value.split(',') if v.strip())
        except ValueError:
            raise self.error(section, key, f"不是數值列表: {value!r}")

    def optional_float(self, section: str, key: str) -> Optional[float]:
        return self.get_float(section, key) if self.has(section, key) else None

    def optional_int(self, section: str, key: str) -> Optional[int]:
        return self.get_int(section, key) if self.has(section, key) else None


def load_params(path: str, scenarios_path: Optional[str] = None) -> ParamBundle:
    """
    載入並驗證參數組

    參數:
        path: INI 參數檔路徑
        scenarios_path: 覆寫 [tumor] scenario_file 的情境檔

    返回:
        ParamBundle (drugs, tumor, wbc, grid)
    """
    reader = IniReader(path)
    base_dir = os.path.dirname(os.path.abspath(path))

    wbc = WbcParams(
        n_w0=reader.get_float('wbc', 'n_w0'),
        production=reader.get_float('wbc', 'production'),
        turnover=reader.get_float('wbc', 'turnover'),
        delay_days=reader.get_int('wbc', 'delay_days'),
        theta_neu=reader.get_float('wbc', 'theta_neu'),
        theta_lym=reader.get_float('wbc', 'theta_lym'),
        beta_neu=reader.get_float('wbc', 'beta_neu'),
        beta_lym=reader.get_float('wbc', 'beta_lym'),
    )

    if reader.has('grid', 'step_hours'):
        step_hours = reader.get_float('grid', 'step_hours')
    else:
        step_hours = reader.get_float('grid', 'step_minutes') / 60.0
    grid = TimeGrid(
        horizon_days=reader.get_int('grid', 'horizon_days'),
        step_hours=step_hours,
        meal_offsets=reader.get_floats('grid', 'meal_hours'),
        wbc_lag_days=wbc.delay_days,
        compartment_volume=reader.get_float('grid', 'compartment_volume'),
        body_surface=reader.get_float('grid', 'body_surface'),
    )

    drug_sections = reader.sections('drug.')
    if not drug_sections:
        logger.warning(f"參數檔 {path} 未定義任何藥物")
    drug_ids = {s.split('.', 1)[1]: reader.get_int(s, 'id') for s in drug_sections}

    type_sections = sorted(reader.sections('celltype.'), key=lambda s: int(s.split('.', 1)[1]))
    if not type_sections:
        raise ParameterFileError("至少需要一個 [celltype.N] 區段", path)
    cell_types = []
    for index, section in enumerate(type_sections):
        resistant_name = reader.get_text(section, 'resistant_to', default='')
        if resistant_name and resistant_name not in drug_ids:
            raise reader.error(section, 'resistant_to', f"未知藥物 {resistant_name}")
        cell_types.append(CellType(id=index, name=reader.get_text(section, 'name', default=f'type{index}'),
                                   resistant_to=drug_ids[resistant_name] if resistant_name else None))

    n0 = [reader.optional_float(s, 'n0') for s in type_sections]
    if any(v is None for v in n0):
        scenario_file = scenarios_path or reader.get_text('tumor', 'scenario_file', default='')
        if not scenario_file:
            raise reader.error('tumor', 'scenario_file', "celltype 未給 n0 時必須指定情境檔")
        if not os.path.isabs(scenario_file):
            scenario_file = os.path.join(base_dir, scenario_file)
        means = load_scenarios(scenario_file).weighted_mean_counts()
        if len(means) != len(type_sections):
            raise reader.error('tumor', 'scenario_file',
                               f"情境檔類型數 {len(means)} 與 celltype 數 {len(type_sections)} 不符")
        n0 = [v if v is not None else float(m) for v, m in zip(n0, means)]

    tumor = TumorParams(
        cell_types=tuple(cell_types),
        n0_by_type=tuple(n0),
        n_inf_by_type=tuple(reader.get_float(s, 'n_inf') for s in type_sections),
        lam=reader.get_float('tumor', 'lambda'),
    )

    resistant_factor = reader.get_float('tumor', 'resistant_factor', default=0.25)
    drugs = []
    for section in sorted(drug_sections, key=lambda s: drug_ids[s.split('.', 1)[1]]):
        name = section.split('.', 1)[1]
        route_text = reader.raw(section, 'route')
        try:
            route = Route(route_text)
        except ValueError:
            raise reader.error(section, 'route', f"未知給藥途徑 {route_text!r}")
        if reader.has(section, 'eta_by_celltype'):
            eta = reader.get_floats(section, 'eta_by_celltype')
        else:
            eta0 = reader.get_float(section, 'eta0')
            eta = tuple(resistant_factor * eta0 if ct.resistant_to == drug_ids[name] else eta0
                        for ct in cell_types)
        drugs.append(DrugParams(
            id=drug_ids[name],
            name=name,
            xi=reader.get_float(section, 'xi'),
            eta_by_celltype=eta,
            eta_wbc=reader.get_float(section, 'eta_wbc'),
            rho=reader.get_float(section, 'rho'),
            beta_eff=reader.get_float(section, 'beta_eff'),
            beta_conc=reader.get_float(section, 'beta_conc'),
            beta_rate=reader.get_float(section, 'beta_rate'),
            beta_cum=reader.get_float(section, 'beta_cum'),
            route=route,
            pill_mass=reader.optional_float(section, 'pill_mass'),
            rest_days=reader.optional_int(section, 'rest_days'),
            window_days=reader.optional_int(section, 'window_days'),
        ))

    bundle = ParamBundle(drugs=tuple(drugs), tumor=tumor, wbc=wbc, grid=grid)
    logger.info(f"載入參數檔 {path}: {len(drugs)} 種藥物, {tumor.n_types} 種細胞類型, "
                f"{grid.horizon_days} 天, 步長 {grid.step_minutes:g} 分鐘")
    return bundle


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def params_to_text(bundle: ParamBundle) -> str:
    """參數組序列化為 INI 文字 (含單位註解)，重新載入得到相同的參數組"""
    grid, tumor, wbc = bundle.grid, bundle.tumor, bundle.wbc
    names = {d.id: d.name for d in bundle.drugs}
    lines = [
        "[grid]",
        "# day", f"horizon_days = {grid.horizon_days}",
        "# hour", f"step_hours = {_fmt(grid.step_hours)}",
        "# hour of day", f"meal_hours = {', '.join(_fmt(v) for v in grid.meal_offsets)}",
        "# m^3", f"compartment_volume = {_fmt(grid.compartment_volume)}",
        "# m^2", f"body_surface = {_fmt(grid.body_surface)}",
        "",
        "[tumor]",
        "# 1/day", f"lambda = {_fmt(tumor.lam)}",
        "",
    ]
    for ct, n0, n_inf in zip(tumor.cell_types, tumor.n0_by_type, tumor.n_inf_by_type):
        lines += [f"[celltype.{ct.id}]", f"name = {ct.name}"]
        if ct.resistant_to is not None:
            lines.append(f"resistant_to = {names[ct.resistant_to]}")
        lines += ["# cells", f"n0 = {_fmt(n0)}", "# cells，該類型自己的 Gompertz 上限", f"n_inf = {_fmt(n_inf)}", ""]
    lines += [
        "[wbc]",
        "# cells/m^3", f"n_w0 = {_fmt(wbc.n_w0)}",
        "# cells/m^3/day", f"production = {_fmt(wbc.production)}",
        "# 1/day", f"turnover = {_fmt(wbc.turnover)}",
        "# day", f"delay_days = {wbc.delay_days}",
        f"theta_neu = {_fmt(wbc.theta_neu)}",
        f"theta_lym = {_fmt(wbc.theta_lym)}",
        "# cells/m^3", f"beta_neu = {_fmt(wbc.beta_neu)}", f"beta_lym = {_fmt(wbc.beta_lym)}",
        "",
    ]
    for drug in bundle.drugs:
        lines += [
            f"[drug.{drug.name}]",
            f"id = {drug.id}",
            f"route = {drug.route.value}",
            "# 1/day", f"xi = {_fmt(drug.xi)}",
            "# m^3/g/day", f"eta_by_celltype = {', '.join(_fmt(v) for v in drug.eta_by_celltype)}",
            f"eta_wbc = {_fmt(drug.eta_wbc)}",
            "# 1/day", f"rho = {_fmt(drug.rho)}",
            "# g/m^3", f"beta_eff = {_fmt(drug.beta_eff)}",
            "# g in compartment", f"beta_conc = {_fmt(drug.beta_conc)}",
            "# g/m^2 per administration (oral) or g/m^2/hr (intravenous)", f"beta_rate = {_fmt(drug.beta_rate)}",
            "# g/m^2/day", f"beta_cum = {_fmt(drug.beta_cum)}",
        ]
        if drug.pill_mass is not None:
            lines += ["# g", f"pill_mass = {_fmt(drug.pill_mass)}"]
        if drug.rest_days is not None:
            lines += ["# day", f"rest_days = {drug.rest_days}"]
        if drug.window_days is not None:
            lines += ["# day", f"window_days = {drug.window_days}"]
        lines.append("")
    return "\n".join(lines)


def save_params(bundle: ParamBundle, path: str) -> str:
    """將參數組寫成 INI 參數檔"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with file_lock_manager.get_lock(path):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(params_to_text(bundle))
    logger.info(f"參數檔已寫出: {path}")
    return path


def load_scenarios(path: str) -> ScenarioSet:
    """讀取情境 CSV (欄位 logpop_0..logpop_{Q-1}, prob)"""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise ParameterFileError(f"無法讀取情境檔: {e}", path)
    pop_cols = sorted((c for c in df.columns if c.startswith('logpop_')), key=lambda c: int(c.split('_')[1]))
    if not pop_cols or 'prob' not in df.columns:
        raise ParameterFileError("情境檔必須包含 logpop_* 與 prob 欄位", path)
    try:
        return ScenarioSet.from_arrays(df[pop_cols].to_numpy(dtype=float), df['prob'].to_numpy(dtype=float))
    except InvariantViolation as e:
        raise ParameterFileError(str(e), path)


def scenarios_to_frame(scenarios: ScenarioSet) -> pd.DataFrame:
    data = {f'logpop_{q}': scenarios.log_pops[:, q] for q in range(scenarios.n_types)}
    data['prob'] = scenarios.probs
    return pd.DataFrame(data)


def save_scenarios(scenarios: ScenarioSet, path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with file_lock_manager.get_lock(path):
        scenarios_to_frame(scenarios).to_csv(path, index=False)
    return path


def initial_objective(bundle: ParamBundle) -> float:
    """初始目標值 Σ_q P_{q,0}"""
    return float(np.sum(bundle.tumor.p0))
