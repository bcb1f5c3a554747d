# 命令列入口
# main.py
import os
import sys
# 將項目根目錄添加到 Python 路徑
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import argparse
import warnings
# 忽略 Pandas 的警告信息
warnings.filterwarnings("ignore", category=UserWarning, module='pandas')

# 首先初始化日誌
from utils.logging import setup_logging, get_logger, set_quiet
setup_logging()
logger = get_logger(__name__)

from config.constants import DEFAULT_PARAMS_PATH, DEFAULT_TIME_LIMIT, SOLVER_ENV_VAR
from config.loader import load_params
from core import PlanningContext, ProcessingMode
from core.enums import BilinearMode, ObjectiveMode, StudentizeMode, WbcSampling
from core.errors import InfeasibleModelError
from orchestration.orchestrator import PlanningOrchestrator, load_scenario_options
from scenarios.branching import BranchingConfig
from transcription.options import DEFAULT_EPSILON, DEFAULT_N_SURG, BuildOptions

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2


def _floats(text: str):
    return [float(v) for v in text.split(',') if v.strip()]


def _add_grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--h-minutes', type=float, default=None, help='時間步長 (分鐘)，覆寫參數檔')
    parser.add_argument('--days', type=int, default=None, help='規劃天數，覆寫參數檔')


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--bilinear', choices=[m.value for m in BilinearMode], default='discrete')
    parser.add_argument('--levels', type=int, default=20, help='離散化層數 K (Δ = (n_w0 − β_w)/K)')
    parser.add_argument('--sampling', choices=[m.value for m in WbcSampling], default='day_start')
    parser.add_argument('--scenarios-file', default=None, help='情境 CSV；提供時建立機會約束模型')
    parser.add_argument('--epsilon', type=float, default=DEFAULT_EPSILON)
    parser.add_argument('--n-surg', type=float, default=DEFAULT_N_SURG)
    parser.add_argument('--objective', choices=[m.value for m in ObjectiveMode], default='shrinkage')


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--backend', choices=['builtin', 'scipy', 'external'], default='builtin')
    parser.add_argument('--time-limit', type=float, default=DEFAULT_TIME_LIMIT, help='求解時間上限 (秒)')
    parser.add_argument('--mip-gap', type=float, default=None, help='相對 MIP 間隙')
    parser.add_argument('--solver-cmd', default=None,
                        help=f'外部求解器命令模板，含 {{mps}} {{sol}} {{time_limit}}；預設讀取 ${SOLVER_ENV_VAR}')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='chemoplan', description='化療給藥規劃 MILP 工具')
    parser.add_argument('--params', default=DEFAULT_PARAMS_PATH, help='INI 參數檔')
    parser.add_argument('--out', default='results', help='輸出目錄')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--workers', type=int, default=None, help='並行工作數；未指定時串行執行')
    parser.add_argument('--quiet', action='store_true', help='控制台只輸出警告以上')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='模擬給藥計畫下的動態')
    _add_grid_flags(p)
    p.add_argument('--plan', default=None, help='給藥表 CSV (plan_doses.csv 格式)')
    p.add_argument('--no-drugs', action='store_true', help='不給藥，只模擬自然生長')

    p = sub.add_parser('scenarios', help='分支過程模擬並聚類成情境')
    p.add_argument('--k', type=int, default=10)
    p.add_argument('--replications', type=int, default=10_000)
    p.add_argument('--generations', type=int, default=30)
    p.add_argument('--mutation', type=_floats, default=[0.005, 0.005, 0.005], help='各抗藥類型突變機率，逗號分隔')
    p.add_argument('--studentize', choices=[m.value for m in StudentizeMode], default='log')
    p.add_argument('--inertia', type=int, default=None, metavar='K_MAX', help='同時輸出 k = 1..K_MAX 的慣性曲線')

    p = sub.add_parser('calibrate', help='以臨床試驗 PRR 校準殺傷效應')
    p.add_argument('--regimens', default=None, help='給藥方案 INI')
    p.add_argument('--trials', type=int, default=1000)
    p.add_argument('--sigma', type=float, default=0.10, help='病患擾動標準差相對 |η| 的比例')

    p = sub.add_parser('build', help='建立 MILP 並寫出 MPS')
    _add_grid_flags(p)
    _add_model_flags(p)
    p.add_argument('--output', default='model.mps')

    p = sub.add_parser('solve', help='建模並求解')
    _add_grid_flags(p)
    _add_model_flags(p)
    _add_backend_flags(p)

    p = sub.add_parser('sweep', help='單一參數敏感度掃描')
    _add_grid_flags(p)
    _add_model_flags(p)
    _add_backend_flags(p)
    p.add_argument('--selector', required=True,
                   help='xi:NAME | eta0:NAME | etaw:NAME | rho:NAME | neutropenia | maxdose:NAME')
    p.add_argument('--fractions', type=_floats, default=[0.8, 0.9, 1.0, 1.1, 1.2])

    p = sub.add_parser('regularize', help='將最優給藥表轉為固定用餐給藥模式')
    _add_grid_flags(p)
    p.add_argument('--plan', required=True, help='最優計畫的給藥表 CSV')
    p.add_argument('--drop-rest-days', action='store_true', help='不保留最優計畫中的休息日')

    p = sub.add_parser('compare', help='步長與雙線性處理方式比較表')
    _add_grid_flags(p)
    _add_backend_flags(p)
    p.add_argument('--h-list', type=_floats, default=[240.0, 60.0], help='步長 (分鐘)，逗號分隔')
    p.add_argument('--full-grid', action='store_true', help='輸出步長 × 雙線性的完整組合')

    p = sub.add_parser('validate', help='執行性質驗證套件')
    return parser


def _bundle(args):
    bundle = load_params(args.params)
    grid = bundle.grid
    if getattr(args, 'h_minutes', None):
        grid = grid.with_step(args.h_minutes / 60.0)
    if getattr(args, 'days', None):
        grid = grid.with_horizon(args.days)
    return bundle.with_grid(grid)


def _options(args) -> BuildOptions:
    options = BuildOptions(bilinear=BilinearMode(args.bilinear), levels=args.levels,
                           objective=ObjectiveMode(args.objective), epsilon=args.epsilon,
                           n_surg=args.n_surg, wbc_sampling=WbcSampling(args.sampling))
    return load_scenario_options(args.scenarios_file, options)


def _context(args) -> PlanningContext:
    context = PlanningContext(
        seed=args.seed, out_dir=args.out,
        mode=ProcessingMode.CONCURRENT if args.workers else ProcessingMode.SEQUENTIAL,
        max_workers=args.workers,
    )
    if hasattr(args, 'backend'):
        context.set_config('backend', args.backend)
        context.set_config('time_limit', args.time_limit)
        context.set_config('workdir', os.path.join(args.out, 'solver'))
        if args.mip_gap is not None:
            context.set_config('mip_rel_gap', args.mip_gap)
        command = args.solver_cmd or os.environ.get(SOLVER_ENV_VAR)
        if command:
            context.set_config('solver_command', command)
    return context


def dispatch(args, orchestrator: PlanningOrchestrator):
    command = args.command
    if command == 'scenarios':
        config = BranchingConfig(generations=args.generations, replications=args.replications,
                                 mutation_probs=tuple(args.mutation), rng_seed=args.seed)
        return orchestrator.run('scenarios', config=config, k=args.k,
                                studentize=StudentizeMode(args.studentize), inertia_k_max=args.inertia)
    bundle = _bundle(args)
    if command == 'simulate':
        return orchestrator.run('simulate', bundle=bundle, plan_path=args.plan, no_drugs=args.no_drugs)
    if command == 'calibrate':
        return orchestrator.run('calibrate', bundle=bundle, regimens_path=args.regimens,
                                trials=args.trials, sigma_frac=args.sigma)
    if command == 'build':
        return orchestrator.run('build', bundle=bundle, options=_options(args), filename=args.output)
    if command == 'solve':
        return orchestrator.run('solve', bundle=bundle, options=_options(args))
    if command == 'sweep':
        return orchestrator.run('sweep', bundle=bundle, selector=args.selector, fractions=args.fractions,
                                options=_options(args))
    if command == 'regularize':
        return orchestrator.run('regularize', bundle=bundle, plan_path=args.plan,
                                preserve_rest_days=not args.drop_rest_days)
    if command == 'compare':
        return orchestrator.run('compare', bundle=bundle, step_minutes=args.h_list, full_grid=args.full_grid)
    return orchestrator.run('validate', bundle=bundle)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    set_quiet(args.quiet)
    try:
        orchestrator = PlanningOrchestrator(_context(args))
        paths = dispatch(args, orchestrator)
    except InfeasibleModelError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as e:
        logger.error(f"{args.command} 失敗: {type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    for path in paths:
        logger.info(f"產出: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
