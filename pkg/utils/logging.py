# utils/logging.py
import logging
import inspect
import threading
import os
from utils.enhanced_logging import setup_enhanced_logging, set_console_level
from utils.traceback_logger import get_traceback_logger, setup_global_exception_handler, init_worker

_logging_setup_lock = threading.RLock()
_process_initialized = set()


def setup_logging(level=logging.INFO):
    """
    設置全局日誌配置，每個進程只執行一次
    重複調用直接返回，避免重複建立處理器與背景線程
    """
    current_pid = os.getpid()
    with _logging_setup_lock:
        if current_pid in _process_initialized:
            return
        try:
            setup_enhanced_logging(level)
            setup_global_exception_handler()
            _process_initialized.add(current_pid)
            get_traceback_logger('logging_setup').debug(f"日誌系統已在進程 {current_pid} 中初始化")
        except Exception as e:
            # 日誌目錄不可寫時退回基本設定
            logging.basicConfig(level=level)
            _process_initialized.add(current_pid)
            logging.getLogger('logging_setup').error(f"初始化日誌系統時發生錯誤: {str(e)}")


def get_logger(name=None):
    """
    獲取日誌記錄器 (TracebackLogger)，未提供名稱時使用調用者模組名

    返回:
        自動添加 traceback 信息的 logger 實例
    """
    setup_logging()
    if name is None:
        try:
            name = inspect.currentframe().f_back.f_globals.get('__name__', 'root')
        except (AttributeError, ValueError):
            name = 'root'
    return get_traceback_logger(name)


def set_quiet(quiet: bool = True) -> None:
    """安靜模式：控制台只輸出 WARNING 以上"""
    set_console_level(logging.WARNING if quiet else logging.INFO)


__all__ = ['setup_logging', 'get_logger', 'init_worker', 'set_quiet']
