# utils/resource_manager.py
import os
import time
from typing import Any, Dict, Optional

import psutil


class ResourceManager:
    """系統資源管理器，依 CPU/記憶體負載決定工作進程數"""

    def __init__(self):
        self.resources = self.monitor_system_resources()

    def monitor_system_resources(self) -> Dict[str, Any]:
        """取樣系統資源使用情況"""
        memory = psutil.virtual_memory()
        cpu = psutil.cpu_percent(interval=0.1, percpu=True) or [0.0]
        return {
            'memory_used_percent': memory.percent,
            'available_memory_gb': memory.available / (1024 ** 3),
            'cpu_usage': cpu,
            'average_cpu': sum(cpu) / len(cpu),
            'timestamp': time.time()
        }

    def refresh(self) -> Dict[str, Any]:
        self.resources = self.monitor_system_resources()
        return self.resources

    def get_adaptive_workers(self, task_type: str = 'cpu', min_workers: int = 1,
                             max_workers: Optional[int] = None) -> int:
        """根據系統負載動態調整工作數

        參數:
            task_type: 'cpu' (求解、蒙地卡羅) 或 'io' (外部求解器子進程、寫檔)
            min_workers: 最小工作數
            max_workers: 最大工作數 (默認為CPU核心數)
        """
        if max_workers is None:
            max_workers = os.cpu_count() or 4
        min_workers = min(min_workers, max_workers)

        resources = self.resources or self.monitor_system_resources()
        if resources['memory_used_percent'] > 85 or resources['average_cpu'] > 90:
            return min_workers

        if task_type == 'io':
            worker_count = int(max_workers * 1.5)
        else:
            cpu_based = int(max_workers * (1 - resources['average_cpu'] / 100))
            memory_based = int(max_workers * (1 - resources['memory_used_percent'] / 100))
            worker_count = min(cpu_based, memory_based)

        return max(min_workers, min(worker_count, max_workers))
