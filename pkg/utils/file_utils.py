# utils/file_utils.py
import os
from typing import Any, Dict

import pandas as pd

SUPPORTED_TABLE_FORMATS = ('.csv', '.txt')


def detect_file_format(file_path: str) -> Dict[str, Any]:
    """檢測檔案格式並返回讀寫方法與參數；所有產出物皆為 CSV

    參數:
        file_path: 檔案路徑

    返回:
        包含 reader, writer 和 params 的字典
    """
    ext = os.path.splitext(file_path)[1].lower()
    if ext in SUPPORTED_TABLE_FORMATS:
        return {'reader': pd.read_csv, 'writer': 'to_csv', 'params': {'index': False}}
    raise ValueError(f"不支援的檔案格式: {ext}，產出物一律使用 CSV")


def read_table(file_path: str) -> pd.DataFrame:
    """讀取 CSV 表格"""
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"找不到檔案: {file_path}")
    format_info = detect_file_format(file_path)
    return format_info['reader'](file_path)
