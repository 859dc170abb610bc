"""Service layer: Monte Carlo, verification and CSV reporting"""
