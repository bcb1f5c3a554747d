"""不同時間步長與雙線性處理方式的求解比較表"""
from typing import Optional, Sequence, Tuple

import pandas as pd

from analysis.runner import SolveTask, run_tasks
from core.context import PlanningContext
from core.domain import ParamBundle
from core.enums import BilinearMode, ProcessingMode
from transcription.options import BuildOptions

# (標籤, 選項)；Δ 以 (n_w0 − β_w) 的比例表示
DEFAULT_BILINEAR_CONFIGS: Tuple[Tuple[str, BuildOptions], ...] = (
    ('mccormick', BuildOptions.mccormick()),
    ('discrete 1/20', BuildOptions.discrete(1 / 20)),
    ('discrete 1/40', BuildOptions.discrete(1 / 40)),
)

COLUMNS = ['config', 'objective', 'runtime', 'constraints', 'variables', 'integers', 'binaries', 'gap',
           'status', 'error']


def bilinear_label(options: BuildOptions) -> str:
    if options.bilinear is BilinearMode.MCCORMICK:
        return 'mccormick'
    return f"discrete 1/{options.levels}"


def _solver_config(context: PlanningContext) -> dict:
    return {k: context.get_config(k) for k in ('mip_rel_gap', 'solver_command', 'workdir')
            if context.get_config(k) is not None}


def compare_step_sizes(bundle: ParamBundle, step_minutes: Sequence[float], options: Optional[BuildOptions] = None,
                       backend: str = 'builtin', time_limit: Optional[float] = None,
                       context: Optional[PlanningContext] = None,
                       mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                       max_workers: Optional[int] = None) -> pd.DataFrame:
    """
    同一實例在不同步長下的求解統計

    返回:
        每個步長一列：config ('h=240')、objective、runtime、約束/變數/整數/二元數、gap
    """
    options = options or BuildOptions()
    context = context or PlanningContext()
    tasks = [SolveTask(f"h={minutes:g}", bundle, options, grid=bundle.grid.with_step(minutes / 60.0),
                       backend=backend, time_limit=time_limit, solver_config=_solver_config(context))
             for minutes in step_minutes]
    frame = run_tasks(tasks, mode=mode, max_workers=max_workers, context=context, label='步長比較')
    frame.insert(1, 'h (minute)', [float(m) for m in step_minutes])
    return frame.reindex(columns=['config', 'h (minute)'] + COLUMNS[1:])


def compare_bilinear(bundle: ParamBundle, configs: Sequence[Tuple[str, BuildOptions]] = DEFAULT_BILINEAR_CONFIGS,
                     backend: str = 'builtin', time_limit: Optional[float] = None,
                     context: Optional[PlanningContext] = None,
                     mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                     max_workers: Optional[int] = None) -> pd.DataFrame:
    """同一實例在不同雙線性處理方式下的求解統計，每個設定一列"""
    context = context or PlanningContext()
    tasks = [SolveTask(label, bundle, options, backend=backend, time_limit=time_limit,
                       solver_config=_solver_config(context))
             for label, options in configs]
    frame = run_tasks(tasks, mode=mode, max_workers=max_workers, context=context, label='雙線性比較')
    return frame.reindex(columns=COLUMNS)


def compare_configurations(bundle: ParamBundle, step_minutes: Sequence[float],
                           bilinear_options: Sequence[BuildOptions], backend: str = 'builtin',
                           time_limit: Optional[float] = None, context: Optional[PlanningContext] = None,
                           mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                           max_workers: Optional[int] = None) -> pd.DataFrame:
    """步長 × 雙線性選項的完整組合，config 欄為 'h=60 discrete 1/20' 形式"""
    context = context or PlanningContext()
    tasks = []
    for minutes in step_minutes:
        grid = bundle.grid.with_step(minutes / 60.0)
        for options in bilinear_options:
            tasks.append(SolveTask(f"h={minutes:g} {bilinear_label(options)}", bundle, options, grid=grid,
                                   backend=backend, time_limit=time_limit, solver_config=_solver_config(context)))
    frame = run_tasks(tasks, mode=mode, max_workers=max_workers, context=context, label='設定比較')
    return frame.reindex(columns=COLUMNS)
