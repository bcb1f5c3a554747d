import os
import threading

# 資源鎖
log_lock = threading.Lock()  # 多行日誌區塊的輸出鎖

CONFIG_DIR = os.path.dirname(os.path.abspath(__file__))
PARAMS_DIR = os.path.join(CONFIG_DIR, 'params')
DEFAULT_PARAMS_PATH = os.path.join(PARAMS_DIR, 'default.ini')
DEFAULT_REGIMENS_PATH = os.path.join(PARAMS_DIR, 'regimens.ini')
DEFAULT_SCENARIOS_PATH = os.path.join(PARAMS_DIR, 'scenarios_default.csv')

# 外部求解器命令模板的環境變數，模板含 {mps} {sol} {time_limit} 佔位符
SOLVER_ENV_VAR = 'CHEMO_SOLVER_CMD'

# MILP 中白血球數以 1e12 cells/m³ 為單位，避免係數量級懸殊
WBC_UNIT = 1e12

# 求解容差
FEASIBILITY_TOL = 1e-6
INTEGRALITY_TOL = 1e-6
DEFAULT_MIP_GAP = 1e-4  # 0.01%
DEFAULT_TIME_LIMIT = 7200.0  # 秒
