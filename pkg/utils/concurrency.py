# utils/concurrency.py
import concurrent.futures
import time
import traceback
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

from core.enums import ProcessingMode
from utils.logging import get_logger, init_worker
from utils.resource_manager import ResourceManager

logger = get_logger(__name__)


@dataclass
class TaskOutcome:
    """單一任務的結果，error_info 為 None 表示成功"""
    index: int
    value: Any = None
    error_info: Optional[Dict[str, str]] = None

    @property
    def ok(self) -> bool:
        return self.error_info is None


def _run_task(func: Callable, index: int, item: Any) -> TaskOutcome:
    """模組級任務包裝，可被 ProcessPoolExecutor 序列化；錯誤以 error_info 回傳而非拋出"""
    try:
        return TaskOutcome(index, func(item))
    except Exception as e:
        return TaskOutcome(index, None, {
            'error_type': type(e).__name__,
            'error_message': str(e),
            'traceback': traceback.format_exc(),
        })


def run_indexed(func: Callable[[Any], Any],
                items: Sequence[Any],
                mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                max_workers: Optional[int] = None,
                task_type: str = 'cpu',
                label: str = '任務') -> List[TaskOutcome]:
    """
    依序或並行執行 func(item)，結果按輸入索引排序

    參數:
        func: 模組級函數 (並行 CPU 模式需可序列化)
        items: 輸入列表
        mode: 串行或並行
        max_workers: 最大工作數，None 時由 ResourceManager 決定
        task_type: 'cpu' 使用 ProcessPoolExecutor，'io' 使用 ThreadPoolExecutor
        label: 日誌中的任務名稱

    返回:
        TaskOutcome 列表，順序與 items 一致
    """
    total = len(items)
    if total == 0:
        return []
    start_time = time.time()

    if mode is ProcessingMode.SEQUENTIAL or total == 1:
        outcomes = []
        for i, item in enumerate(items):
            outcomes.append(_run_task(func, i, item))
            logger.debug(f"{label}進度: {i + 1}/{total}")
    else:
        if max_workers is None:
            max_workers = ResourceManager().get_adaptive_workers(task_type=task_type, min_workers=1)
        workers = max(1, min(max_workers, total))
        logger.info(f"開始並行執行 {total} 個{label}，使用 {workers} 個工作{'進程' if task_type == 'cpu' else '線程'}")
        if task_type == 'cpu':
            executor = concurrent.futures.ProcessPoolExecutor(max_workers=workers, initializer=init_worker)
        else:
            executor = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
        results_by_index = {}
        with executor:
            futures = {executor.submit(_run_task, func, i, item): i for i, item in enumerate(items)}
            for done, future in enumerate(concurrent.futures.as_completed(futures), start=1):
                index = futures[future]
                try:
                    results_by_index[index] = future.result()
                except Exception as e:
                    # 工作進程崩潰等無法在任務內捕獲的錯誤
                    results_by_index[index] = TaskOutcome(index, None, {
                        'error_type': type(e).__name__,
                        'error_message': str(e),
                        'traceback': traceback.format_exc(),
                    })
                logger.debug(f"{label}進度: {done}/{total}")
        outcomes = [results_by_index[i] for i in range(total)]

    failed = [o for o in outcomes if not o.ok]
    for outcome in failed:
        logger.error(f"{label} {outcome.index + 1}/{total} 失敗: "
                     f"{outcome.error_info['error_type']}: {outcome.error_info['error_message']}")
    logger.info(f"{label}完成: 成功 {total - len(failed)}/{total}，耗時 {time.time() - start_time:.2f}秒")
    return outcomes
