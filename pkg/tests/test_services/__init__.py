# Numerical service tests
