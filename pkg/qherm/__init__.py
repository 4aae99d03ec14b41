# qherm/__init__.py
"""BM quasi-Hermitian varieties of PG(3,q^2) for q even."""
