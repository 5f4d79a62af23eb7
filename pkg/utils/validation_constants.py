"""Constants for numerical validation, enumeration caps and output schemas"""

# Tolerances (bits unless stated otherwise)
CAPACITY_ATOL = 1e-9
IDENTITY_RTOL = 1e-8

# Exhaustive enumeration caps
MAX_EXHAUSTIVE_RELAYS = 20
MAX_PATH_ENUM_RELAYS = 10
MAX_SUBSET_ORACLE_DIM = 12
MAX_SUBCHANNEL_COMBINATIONS = 10**6
MAX_MIMO_VERIFY_DIM = 5

# Cut masks evaluated per batched log-det call
CUT_CHUNK_SIZE = 4096

DEFAULT_RAYLEIGH_SCALE = 1.0

# Network JSON document keys
NETWORK_KEYS = {'num_relays', 'layers', 'gains', 'link_capacities', 'designed'}
LAYER_KEYS = {'L', 'N_L'}
GAIN_ENTRY_KEYS = {'from', 'to', 're', 'im'}
CAPACITY_ENTRY_KEYS = {'from', 'to', 'bits'}
DESIGNED_KEYS = {'capacity_bits', 'cut', 'route_bound_bits', 'family', 'degenerate'}
CHANNEL_KEYS = {'rows', 'cols', 'entries'}

TIGHT_FAMILIES = {'general-odd', 'general-even', 'layered-odd', 'layered-even'}

# Output schemas
CSV_SCHEMA_VERSION = 1
VERIFY_CSV_COLUMNS = ['trial', 'cap_bits', 'route_bits', 'fraction', 'bound_bits', 'satisfied']
MIMO_CSV_COLUMNS = ['trial', 'kt', 'kr', 'cap_bits', 'best_bits', 'greedy_bits', 'bound_bits', 'satisfied']
PROP1_CSV_COLUMNS = ['L', 'N_L', 'max_t', 't_max', 'satisfied']
PROP2_CSV_COLUMNS = ['trial', 'n', 'k', 'poly_residual', 'scalar_residual', 'tolerance', 'satisfied']
CSV_FLOAT_FORMAT = '%.12g'
