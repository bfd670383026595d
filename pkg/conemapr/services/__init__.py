"""Numerical services: geometry, measurement, conic, estimator, crlb, mle, montecarlo, report."""
