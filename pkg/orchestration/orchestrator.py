from typing import List, Optional, Sequence
import os
import time

import numpy as np
import pandas as pd

from analysis.compare import DEFAULT_BILINEAR_CONFIGS, compare_bilinear, compare_configurations, compare_step_sizes
from analysis.metrics import operational_violations, plan_metrics
from analysis.regularize import regularize_plan, report_frame
from analysis.sensitivity import DEFAULT_FRACTIONS, sensitivity_sweep
from calibration.kill_effect import apply_calibration, calibrate_all
from calibration.regimens import load_regimens
from config.constants import DEFAULT_TIME_LIMIT, log_lock
from config.loader import load_scenarios, save_params, scenarios_to_frame
from core.context import PlanningContext
from core.domain import ParamBundle, TimeGrid
from core.enums import ProcessingMode, SolveStatus, StudentizeMode
from core.errors import InfeasibleModelError
from dynamics.simulation import simulate_all
from orchestration.validation import results_frame, run_validation
from processors.output import CsvOutputProcessor
from scenarios.branching import BranchingConfig, simulate_branching
from scenarios.clustering import cluster_scenarios, inertia_curve
from solver.backends import get_backend
from solver.mps import write_mps
from transcription.chance import build_model
from transcription.options import BuildOptions
from transcription.plan import extract_plan, load_doses, plan_from_doses, resimulate, state_deviation
from utils.logging import get_logger


logger = get_logger(__name__)


class PlanningOrchestrator:
    """
    規劃流程協調器
    每個命令讀取參數組、呼叫對應模組並將產出物寫到輸出目錄，回傳寫出的檔案路徑
    """
    def __init__(self, context: PlanningContext = None, outputter: CsvOutputProcessor = None):
        """
        參數:
            context: 執行上下文 (seed、out_dir、backend、time_limit、solver_command、mode、max_workers)
            outputter: CSV 輸出處理器，預設寫到 context 的 out_dir
        """
        self.context = context or PlanningContext()
        self.outputter = outputter or CsvOutputProcessor(self.context)

    @property
    def seed(self) -> int:
        return int(self.context.get_config('seed', 0))

    @property
    def mode(self) -> ProcessingMode:
        return self.context.get_config('mode', ProcessingMode.SEQUENTIAL)

    @property
    def max_workers(self) -> Optional[int]:
        return self.context.get_config('max_workers')

    @property
    def backend(self) -> str:
        return self.context.get_config('backend', 'builtin')

    @property
    def time_limit(self) -> Optional[float]:
        return self.context.get_config('time_limit', DEFAULT_TIME_LIMIT)

    def run(self, command: str, **kwargs) -> List[str]:
        """
        執行單一命令，開始與結束時記錄耗時與統計

        異常:
            命令本身拋出的錯誤在記錄後原樣拋出，由呼叫端決定退出碼
        """
        handler = getattr(self, command, None)
        if handler is None or command.startswith('_') or command == 'run':
            raise ValueError(f"未知的命令: {command}")
        start_time = time.time()
        logger.info(f"======= 開始 {command} (種子: {self.seed}) =======")
        try:
            self.context.reset_stats()
        except Exception as e:
            logger.error(f"重置統計信息時出錯: {str(e)}")
        try:
            paths = handler(**kwargs)
        except Exception as e:
            logger.error(f"{command} 執行出錯: {type(e).__name__}: {e}")
            raise
        summary = self.context.stats.summary()
        logger.info(f"======= {command} 完成，輸出 {summary['artifacts_written']} 個檔案，"
                    f"錯誤 {summary['errors']} 次，總耗時: {time.time() - start_time:.2f}秒 =======")
        return paths

    def _write(self, tables: Sequence) -> List[str]:
        """寫出 (DataFrame, 檔名) 列表；任何一個寫出失敗即拋出 OSError"""
        results = self.outputter.process_concurrent(list(tables))
        failed = [name for name, ok in results.items() if not ok]
        if failed:
            raise OSError(f"無法寫出: {', '.join(failed)}")
        return [self.outputter.resolve(name) for _, name in tables]

    def simulate(self, bundle: ParamBundle, plan_path: Optional[str] = None, no_drugs: bool = False) -> List[str]:
        """
        模擬給藥計畫 (或不給藥) 下的所有動態

        參數:
            bundle: 參數組
            plan_path: dose_frame 格式的給藥表，未提供時不給藥
            no_drugs: 移除所有藥物，只模擬自然生長
        """
        if no_drugs:
            bundle = bundle.with_drugs([])
        doses = load_doses(plan_path, bundle) if plan_path else np.zeros((len(bundle.drugs), bundle.grid.n_steps + 1))
        result = simulate_all(bundle, doses)
        logger.info(f"模擬 {bundle.grid.horizon_days} 天: Σ P_S = {result.objective:.4f}，"
                    f"最終細胞數 {result.final_total_cells:.4g}")
        metrics = pd.DataFrame([plan_metrics(bundle, doses, result)])
        return self._write([(result.to_frame(), 'trajectories.csv'), (metrics, 'simulation_metrics.csv')])

    def scenarios(self, config: Optional[BranchingConfig] = None, k: int = 10,
                  studentize: StudentizeMode = StudentizeMode.LOG, inertia_k_max: Optional[int] = None) -> List[str]:
        """分支過程模擬後聚類成情境集合，可選擇同時輸出 k = 1..k_max 的慣性曲線"""
        config = config or BranchingConfig(rng_seed=self.seed)
        pops = simulate_branching(config, self.mode, self.max_workers)
        scenario_set = cluster_scenarios(pops, k, config.rng_seed, studentize)
        tables = [(scenarios_to_frame(scenario_set), 'scenarios.csv')]
        if inertia_k_max:
            curve = inertia_curve(pops, inertia_k_max, config.rng_seed, studentize)
            tables.append((pd.DataFrame(curve, columns=['k', 'inertia']), 'inertia.csv'))
        return self._write(tables)

    def calibrate(self, bundle: ParamBundle, regimens_path: Optional[str] = None, trials: int = 1000,
                  sigma_frac: float = 0.10, resistant_factor: float = 0.25) -> List[str]:
        """以臨床試驗 PRR 校準各藥物的 η，輸出校準表與更新後的參數檔"""
        regimens = load_regimens(regimens_path)
        results = calibrate_all(bundle, regimens, trials=trials, sigma_frac=sigma_frac, rng_seed=self.seed,
                                mode=self.mode, max_workers=self.max_workers)
        frame = pd.DataFrame([{'drug': r.drug, 'eta': r.eta, 'delta': r.delta, 'prr': r.prr,
                               'target_prr': r.target_prr, 'iterations': r.iterations}
                              for r in results.values()])
        paths = self._write([(frame, 'calibration.csv')])
        calibrated = apply_calibration(bundle, results, resistant_factor)
        params_path = save_params(calibrated, self.outputter.resolve('params_calibrated.ini'))
        self.context.stats.artifact_written(params_path, len(results))
        return paths + [params_path]

    def build(self, bundle: ParamBundle, options: Optional[BuildOptions] = None,
              grid: Optional[TimeGrid] = None, filename: str = 'model.mps') -> List[str]:
        """建立 MILP 並寫出 MPS 檔"""
        model = build_model(bundle, grid, options)
        stats = model.stats()
        path = write_mps(model, self.outputter.resolve(filename))
        self.context.stats.artifact_written(path, stats.constraints)
        logger.info(f"模型規模: 約束 {stats.constraints}，變數 {stats.variables}，"
                    f"整數 {stats.integers}，二元 {stats.binaries}")
        return [path]

    def solve(self, bundle: ParamBundle, options: Optional[BuildOptions] = None,
              grid: Optional[TimeGrid] = None) -> List[str]:
        """
        建模、求解並輸出解、給藥表、狀態表與可行性報告

        異常:
            InfeasibleModelError: 求解器判定模型不可行
        """
        options = options or BuildOptions()
        model = build_model(bundle, grid, options)
        result = get_backend(self.backend, self.context).solve(model, self.time_limit)
        logger.info(result.summary())
        if result.status is SolveStatus.INFEASIBLE:
            raise InfeasibleModelError(f"模型 {model.name} 不可行 ({result.message or result.backend})")
        solution = pd.DataFrame({'variable': list(result.assignment), 'value': list(result.assignment.values())})
        summary = pd.DataFrame([{'status': result.status.value, 'objective': result.objective, 'gap': result.gap,
                                 'runtime': result.runtime, 'backend': result.backend, 'nodes': result.nodes}])
        tables = [(summary, 'solve_summary.csv'), (solution, 'solution.csv')]
        if result.has_solution:
            plan = extract_plan(model, result.assignment)
            replay = resimulate(plan, bundle)
            plan_bundle = bundle.with_grid(plan.grid).with_drugs(plan.drug_names)
            report = [{'source': 'model', 'item': v} for v in result.violations]
            report += [{'source': 'operational', 'item': v}
                       for v in operational_violations(plan_bundle, plan.doses, replay)]
            report += [{'source': 'deviation', 'item': f"{k} = {v:.3e}"}
                       for k, v in state_deviation(plan, replay).items()]
            tables += [(plan.dose_frame(), 'plan_doses.csv'), (plan.state_frame(), 'plan_states.csv'),
                       (pd.DataFrame([plan_metrics(plan_bundle, plan.doses, replay)]), 'plan_metrics.csv'),
                       (pd.DataFrame(report, columns=['source', 'item']), 'feasibility_report.csv')]
        return self._write(tables)

    def sweep(self, bundle: ParamBundle, selector: str, fractions: Sequence[float] = DEFAULT_FRACTIONS,
              options: Optional[BuildOptions] = None) -> List[str]:
        frame = sensitivity_sweep(bundle, selector, fractions, options, self.backend, self.time_limit,
                                  self.context, self.mode, self.max_workers)
        safe = selector.replace(':', '_')
        return self._write([(frame, f'sweep_{safe}.csv')])

    def regularize(self, bundle: ParamBundle, plan_path: str, preserve_rest_days: bool = True) -> List[str]:
        """把最優給藥表轉成每日固定的用餐給藥模式並比較兩者結果"""
        plan = plan_from_doses(bundle, load_doses(plan_path, bundle))
        report = regularize_plan(plan, bundle, preserve_rest_days)
        regulated = plan_from_doses(bundle, report.doses)
        violations = pd.DataFrame({'violation': report.violations})
        return self._write([(report_frame(report, bundle, plan), 'regularization.csv'),
                            (regulated.dose_frame(), 'regulated_doses.csv'),
                            (violations, 'regularization_violations.csv')])

    def compare(self, bundle: ParamBundle, step_minutes: Sequence[float] = (240.0, 60.0),
                bilinear_configs=DEFAULT_BILINEAR_CONFIGS, full_grid: bool = False) -> List[str]:
        """步長比較表與雙線性處理比較表；full_grid 時輸出步長 × 雙線性的完整組合"""
        kwargs = dict(backend=self.backend, time_limit=self.time_limit, context=self.context,
                      mode=self.mode, max_workers=self.max_workers)
        tables = [(compare_step_sizes(bundle, step_minutes, **kwargs), 'compare_step.csv'),
                  (compare_bilinear(bundle, bilinear_configs, **kwargs), 'compare_bilinear.csv')]
        if full_grid:
            grid_frame = compare_configurations(bundle, step_minutes, [o for _, o in bilinear_configs], **kwargs)
            tables.append((grid_frame, 'compare_grid.csv'))
        return self._write(tables)

    def validate(self, bundle: ParamBundle) -> List[str]:
        """
        執行性質驗證套件

        異常:
            AssertionError: 任一套件未通過 (結果檔仍會寫出)
        """
        results = run_validation(bundle, self.seed, self.mode, self.max_workers)
        with log_lock:
            logger.info("\n=== 驗證結果 ===")
            for r in results:
                logger.info(f"{r.name:<12} {'通過' if r.passed else '失敗'}  {r.detail}")
        paths = self._write([(results_frame(results), 'validation.csv')])
        failed = [r.name for r in results if not r.passed]
        for _ in failed:
            self.context.stats.record_error('ValidationFailure')
        if failed:
            raise AssertionError(f"驗證未通過: {', '.join(failed)}")
        return paths


def load_scenario_options(path: Optional[str], options: BuildOptions) -> BuildOptions:
    """有情境檔時回傳機會約束模型的選項"""
    if not path:
        return options
    scenario_set = load_scenarios(path)
    logger.info(f"載入 {len(scenario_set)} 個情境: {os.path.basename(path)}")
    return options.with_scenarios(scenario_set)


