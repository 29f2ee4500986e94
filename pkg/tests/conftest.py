import warnings

# the sandbox TBB is older than numba wants; the fallback layer is fine
warnings.filterwarnings("ignore", message=".*TBB.*")
