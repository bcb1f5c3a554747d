# utils/traceback_logger.py
import logging
import traceback
import inspect
import sys
import threading
import os

_logger_class_lock = threading.RLock()
_exception_handler_lock = threading.RLock()

# 追蹤已安裝例外處理器的進程
_initialized_processes = set()
_process_lock = threading.RLock()


def _append_stack(msg: str) -> str:
    """在訊息後附加簡化的調用堆疊 (最近 5 幀，略過 logging 框架)"""
    try:
        frames = [frame for frame in traceback.extract_stack()
                  if 'logging' not in frame.filename and 'traceback_logger.py' not in frame.filename]
        stack = "堆疊追蹤 (簡化版):\n"
        for frame in frames[-5:]:
            stack += f"  文件 \"{frame.filename}\", 行 {frame.lineno}, 在 {frame.name}\n"
        return f"{msg}\n{stack}"
    except Exception:
        return msg


class TracebackLogger(logging.Logger):
    """
    增強型 Logger 類，在 error 和 critical 記錄中自動添加 traceback
    處於例外上下文時附帶例外信息，否則附帶當前調用堆疊
    """

    def _enrich(self, msg, exc_info, stack_info):
        if exc_info is None and sys.exc_info()[0] is not None:
            exc_info = True
        if not isinstance(msg, str):
            msg = str(msg)
        if not exc_info and not stack_info:
            msg = _append_stack(msg)
        return msg, exc_info

    def error(self, msg, *args, exc_info=None, stack_info=False, extra=None, **kwargs):
        msg, exc_info = self._enrich(msg, exc_info, stack_info)
        super().error(msg, *args, exc_info=exc_info, stack_info=stack_info, extra=extra, **kwargs)

    def critical(self, msg, *args, exc_info=None, stack_info=False, extra=None, **kwargs):
        msg, exc_info = self._enrich(msg, exc_info, stack_info)
        super().critical(msg, *args, exc_info=exc_info, stack_info=stack_info, extra=extra, **kwargs)


def get_traceback_logger(name=None):
    """獲取帶有自動 traceback 功能的 logger，未提供 name 時使用調用者模組名"""
    if name is None:
        try:
            name = inspect.currentframe().f_back.f_globals.get('__name__', 'root')
        except (AttributeError, ValueError):
            name = 'root'

    with _logger_class_lock:
        if not getattr(logging, '_traceback_logger_initialized', False):
            logging.setLoggerClass(TracebackLogger)
            setattr(logging, '_traceback_logger_initialized', True)

    return logging.getLogger(name)


def _thread_exception_handler(args):
    """記錄子線程未捕獲的例外"""
    thread_name = getattr(args.thread, 'name', 'unknown') if args.thread is not None else 'unknown'
    get_traceback_logger(f'thread-{thread_name}').critical(
        f"子線程 '{thread_name}' 未捕獲的例外",
        exc_info=(args.exc_type, args.exc_value, args.exc_traceback)
    )


def setup_global_exception_handler(logger=None):
    """設置全局未捕獲例外處理程序，每個進程只安裝一次"""
    current_pid = os.getpid()
    with _process_lock:
        if current_pid in _initialized_processes:
            return
        _initialized_processes.add(current_pid)

    if logger is None:
        logger = get_traceback_logger('uncaught')

    def handle_exception(exc_type, exc_value, exc_traceback):
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return
        logger.critical(f"進程 {os.getpid()} 主線程未捕獲的例外",
                        exc_info=(exc_type, exc_value, exc_traceback))

    with _exception_handler_lock:
        original_excepthook = sys.excepthook
        if original_excepthook is not sys.__excepthook__ and original_excepthook.__module__ != __name__:
            def combined_excepthook(exc_type, exc_value, exc_traceback):
                handle_exception(exc_type, exc_value, exc_traceback)
                original_excepthook(exc_type, exc_value, exc_traceback)
            sys.excepthook = combined_excepthook
        else:
            sys.excepthook = handle_exception

        if getattr(threading.excepthook, '__module__', 'threading') == 'threading':
            threading.excepthook = _thread_exception_handler


def init_worker():
    """
    子進程初始化函數，在 ProcessPoolExecutor 中作為 initializer 傳入
    設置日誌與例外處理器
    """
    from utils.logging import setup_logging

    setup_logging()
    setup_global_exception_handler()
    get_traceback_logger('process').debug(f"進程 {os.getpid()} 已初始化異常處理")
