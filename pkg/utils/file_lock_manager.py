# utils/file_lock_manager.py
import atexit
import os
import threading
import time


class FileLockManager:
    """路徑感知的文件鎖管理器，同一檔案的並行寫入互斥"""

    def __init__(self, auto_cleanup_interval: float = 300, idle_expiry: float = 600):
        """
        參數:
            auto_cleanup_interval: 自動清理未使用鎖的間隔（秒）
            idle_expiry: 鎖閒置多久後可被清理（秒）
        """
        self._locks = {}
        self._last_used = {}
        self._manager_lock = threading.RLock()
        self._auto_cleanup_interval = auto_cleanup_interval
        self._idle_expiry = idle_expiry
        self._last_cleanup = time.time()

    def get_lock(self, file_path) -> threading.RLock:
        """獲取指定文件的鎖，如果不存在則創建"""
        norm_path = os.path.normpath(os.path.abspath(str(file_path)))
        self._try_auto_cleanup()
        with self._manager_lock:
            lock = self._locks.setdefault(norm_path, threading.RLock())
            self._last_used[norm_path] = time.time()
            return lock

    def _try_auto_cleanup(self) -> None:
        now = time.time()
        if now - self._last_cleanup < self._auto_cleanup_interval:
            return
        with self._manager_lock:
            self._last_cleanup = now
            expired = [path for path, last in self._last_used.items() if now - last > self._idle_expiry]
            for path in expired:
                self._locks.pop(path, None)
                self._last_used.pop(path, None)

    def active_locks(self) -> int:
        with self._manager_lock:
            return len(self._locks)

    def release_all(self) -> None:
        with self._manager_lock:
            self._locks.clear()
            self._last_used.clear()


# 全局實例
file_lock_manager = FileLockManager()
atexit.register(file_lock_manager.release_all)
