from typing import Any

from core.stats import RunStats


class PlanningContext:
    """執行上下文，存儲配置 (種子、輸出目錄、求解器設定等) 與共享資源"""
    def __init__(self, stats: RunStats = None, **config: Any):
        self.stats = stats or RunStats()
        self.config = dict(config)
        self.resources = {}

    def set_config(self, key: str, value: Any) -> None:
        self.config[key] = value

    def get_config(self, key: str, default: Any = None) -> Any:
        return self.config.get(key, default)

    def set_resource(self, key: str, value: Any) -> None:
        self.resources[key] = value

    def get_resource(self, key: str, default: Any = None) -> Any:
        return self.resources.get(key, default)

    def reset_stats(self) -> None:
        self.stats.reset()
