from .report_storage import ReportStorage
from .matrix_storage import MatrixStorage
