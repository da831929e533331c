"""limitdl: a solver for limit Datalog programs, i.e. higher-order
constrained Horn clauses whose predicates are closed in a designated
numeric argument, over linear integer arithmetic or tuples of naturals."""

__version__ = "0.1.0"
