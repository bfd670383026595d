# Solver backend tests
