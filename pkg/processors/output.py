# processors/output.py
from typing import Dict, List, Optional, Tuple
import concurrent.futures
import os
import threading
import time

import pandas as pd

from core.context import PlanningContext
from core.interfaces import Processor
from utils.file_lock_manager import file_lock_manager
from utils.file_utils import detect_file_format
from utils.logging import get_logger

logger = get_logger(__name__)


class CsvOutputProcessor(Processor[Tuple[pd.DataFrame, str], bool]):
    """
    產出物輸出處理器
    將 DataFrame 寫為 CSV (index=False)，同一路徑的寫入以檔案鎖互斥
    """
    def __init__(self, context: PlanningContext = None, output_dir: Optional[str] = None):
        """
        參數:
            context: 執行上下文，統計寫入檔案數與錯誤
            output_dir: 輸出目錄，預設讀取 context 的 out_dir 設定，再預設為 'results'
        """
        super().__init__(context)
        self.output_dir = output_dir or self.context.get_config('out_dir', 'results')

    def resolve(self, filename: str) -> str:
        return filename if os.path.isabs(filename) else os.path.join(self.output_dir, filename)

    def process(self, input_data: Tuple[pd.DataFrame, str], **kwargs) -> bool:
        """
        寫出單個表格

        參數:
            input_data: (DataFrame, 檔名)；相對檔名置於 output_dir 下
            **kwargs: 傳給 DataFrame.to_csv 的額外參數

        返回:
            是否成功寫出
        """
        df, filename = input_data
        path = self.resolve(filename)
        try:
            if not isinstance(df, pd.DataFrame):
                raise TypeError(f"輸入必須是 pandas DataFrame，實際為 {type(df).__name__}")
            if df.empty:
                logger.warning(f"輸出空表格到 {path}")
            format_info = detect_file_format(path)
            params = {**format_info['params'], **kwargs}
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with file_lock_manager.get_lock(path):
                getattr(df, format_info['writer'])(path, **params)
            self.context.stats.artifact_written(path, len(df))
            logger.info(f"完成輸出: {path}，記錄數: {len(df)}")
            return True
        except Exception as e:
            self.context.stats.record_error(type(e).__name__)
            logger.error(f"輸出 {path} 失敗: {e}")
            return False

    def process_concurrent(self, input_data: List[Tuple[pd.DataFrame, str]], max_workers: int = 4,
                           **kwargs) -> Dict[str, bool]:
        """
        以線程池並行寫出多個表格

        返回:
            檔名 → 是否成功
        """
        if not input_data:
            logger.warning("沒有需要輸出的表格")
            return {}
        workers = max(1, min(max_workers, len(input_data)))
        start_time = time.time()
        results: Dict[str, bool] = {}
        results_lock = threading.Lock()
        progress = {'completed': 0}

        def write_with_tracking(item: Tuple[pd.DataFrame, str]) -> bool:
            ok = self.process(item, **kwargs)
            with results_lock:
                results[item[1]] = ok
                progress['completed'] += 1
                logger.debug(f"輸出進度: {progress['completed']}/{len(input_data)}")
            return ok

        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(write_with_tracking, input_data))

        success = sum(results.values())
        logger.info(f"輸出完成，成功: {success}/{len(input_data)}，總耗時: {time.time() - start_time:.2f}秒")
        return results
