# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""Heat invariants, eigenvalue asymptotics and trace formulas
for the perturbed harmonic oscillator."""

# largest heat invariant order the engine builds by default
DEFAULT_MAX_J = 8

# largest derivative order a potential jet may carry
MAX_JET_ORDER = 16

# bump exponents below this value underflow double precision
UNDERFLOW_EXPONENT = -690.0

# environment variable that overrides the spectrum cache directory
CACHE_ENV_VAR = 'OSCITRACE_CACHE'
