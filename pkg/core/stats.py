from typing import Dict, Any, List
from dataclasses import dataclass, field
import time
import threading


@dataclass
class RunStats:
    """一次執行的統計信息，並發安全"""
    # 計數
    tasks_completed: int = 0
    artifacts_written: int = 0
    rows_written: int = 0
    error_count: int = 0
    # 詳細信息
    error_types: Dict[str, int] = field(default_factory=dict)
    artifact_paths: List[str] = field(default_factory=list)
    # 計時
    start_time: float = field(default_factory=time.time)
    # 並發安全的鎖
    lock: threading.Lock = field(default_factory=threading.Lock)

    def task_done(self) -> None:
        with self.lock:
            self.tasks_completed += 1

    def artifact_written(self, path: str, rows: int) -> None:
        """記錄輸出檔案"""
        with self.lock:
            self.artifacts_written += 1
            self.rows_written += rows
            self.artifact_paths.append(path)

    def record_error(self, error_type: str) -> None:
        """記錄錯誤信息"""
        with self.lock:
            self.error_count += 1
            self.error_types[error_type] = self.error_types.get(error_type, 0) + 1

    def summary(self) -> Dict[str, Any]:
        with self.lock:
            return {
                'tasks_completed': self.tasks_completed,
                'artifacts_written': self.artifacts_written,
                'rows_written': self.rows_written,
                'errors': self.error_count,
                'error_types': dict(self.error_types),
                'elapsed_seconds': time.time() - self.start_time,
            }

    def reset(self) -> None:
        with self.lock:
            self.tasks_completed = 0
            self.artifacts_written = 0
            self.rows_written = 0
            self.error_count = 0
            self.error_types.clear()
            self.artifact_paths.clear()
            self.start_time = time.time()
