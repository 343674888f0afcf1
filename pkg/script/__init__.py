# Solver modules; they import each other by bare name.
