from . import common, csv_io, pool

__all__ = ['common', 'csv_io', 'pool']
