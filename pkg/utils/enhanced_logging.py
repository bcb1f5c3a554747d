# utils/enhanced_logging.py
import logging
import queue
import threading
import os
from datetime import datetime

LOG_DIR_ENV = 'CHEMO_LOG_DIR'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_console_handler = None


class QueueHandler(logging.Handler):
    """基於隊列的日誌處理器，由背景線程寫入實際處理器"""

    def __init__(self):
        super().__init__()
        self.handlers = []
        self.queue = queue.Queue()
        self.worker = threading.Thread(target=self._process_queue, name='log-writer', daemon=True)
        self.worker.start()

    def emit(self, record):
        self.queue.put(record)

    def _process_queue(self):
        while True:
            record = self.queue.get()
            try:
                for handler in self.handlers:
                    if record.levelno >= handler.level:
                        handler.handle(record)
            except Exception:
                import traceback
                traceback.print_exc()
            finally:
                self.queue.task_done()

    def addHandler(self, handler):
        self.handlers.append(handler)

    def flush(self):
        """等待隊列清空"""
        self.queue.join()
        for handler in self.handlers:
            handler.flush()


class LevelLockHandler(logging.Handler):
    """按日誌級別使用不同鎖寫入被包裝的處理器"""

    def __init__(self, handler):
        super().__init__()
        self.handler = handler
        self.locks = {level: threading.Lock() for level in
                      (logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR, logging.CRITICAL)}

    def emit(self, record):
        lock = self.locks.get(record.levelno, self.locks[logging.DEBUG])
        with lock:
            self.handler.emit(record)

    def flush(self):
        self.handler.flush()


def log_file_path() -> str:
    """日誌檔路徑：$CHEMO_LOG_DIR 或 ./logs 下的 chemo_{日期}.log"""
    log_dir = os.environ.get(LOG_DIR_ENV, './logs')
    day = datetime.now().strftime('%Y-%m-%d')
    return os.path.join(log_dir, f'chemo_{day}.log')


def setup_enhanced_logging(level=logging.INFO):
    """設置隊列式文件日誌與控制台輸出"""
    global _console_handler
    root_logger = logging.getLogger()

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(LOG_FORMAT)

    log_file = log_file_path()
    os.makedirs(os.path.dirname(log_file), exist_ok=True)
    file_handler = logging.FileHandler(log_file, 'a', 'utf-8')
    file_handler.setFormatter(formatter)

    queue_handler = QueueHandler()
    queue_handler.setLevel(level)
    queue_handler.addHandler(LevelLockHandler(file_handler))

    _console_handler = logging.StreamHandler()
    _console_handler.setFormatter(formatter)
    _console_handler.setLevel(level)

    root_logger.addHandler(queue_handler)
    root_logger.addHandler(_console_handler)
    root_logger.setLevel(level)


def set_console_level(level) -> None:
    """調整控制台輸出級別 (--quiet 使用 WARNING)"""
    if _console_handler is not None:
        _console_handler.setLevel(level)
