from .schedule import CONSTANT_ONE, SchedulePiece, TimeSchedule
from .terms import LindbladTerm, adjoint_apply, lindblad_apply, liouvillian_support, term_norm
from .liouvillian import LocalLiouvillian, assemble, stationarity_residual, truncate
from .factory import TermFactory, random_term
