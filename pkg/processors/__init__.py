from .output import CsvOutputProcessor

__all__ = ['CsvOutputProcessor']
