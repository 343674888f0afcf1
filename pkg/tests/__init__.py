# Unit tests for the exact LP solver.
