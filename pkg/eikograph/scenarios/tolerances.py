"""Tolerances shared by the built-in scenarios and their tests"""

# interval_sqrt
INTERVAL_SUP_ERROR = 5e-3
INTERVAL_CENTER = 5e-3
TRUNCATION_REL = 1e-2
MODULUS_FACTOR = 4.0
BI_LIPSCHITZ_REL = 5e-3

# exact arithmetic on piecewise-constant fields
EXACT = 1e-9

# punctured_disk
DISK_SEGMENT = 5e-2
DISK_LOWER = 0.45
DISK_UPPER_SLACK = 5e-2
DISK_SAMPLE = 50
DISK_SAMPLE_RADII = (0.2, 0.9)

# Monge and weak checks
MONGE_TOL = 0.05
MONGE_PASS_FRACTION = 0.95
MONGE_SAMPLE = 200
SLOPE_D = 0.1
WEAK_TOL = 0.05

# regularity fits
HOLDER_EXPONENT = 0.05
HOLDER_CONSTANT = 0.2
Q_INTERVAL = 0.1
Q_DISK = 0.15

# circle
CIRCLE_TOL = 1e-4
CIRCLE_COLLAR = 0.2
