# hyperparameters for images rescaled to [-1, 1]
LAMBDA0 = 1e-2
ALPHA_M = 1e6
ALPHA_R = 2 * ALPHA_M

# quantization
LEVELS = 256

# predictor features
N_MIN = 6
N_MAX = 8
EMBED_DIM = 32
EMBED_MAX_FREQUENCY = 1e4

# sampling
SAMPLE_STEPS = 1024
SAMPLE_CHUNK = 256

# training
LEARNING_RATE = 1e-3
WEIGHT_DECAY = 1e-2
EMA_BETA = 0.9999
EMA_START_STEP = 1000
BATCH_SIZE = 64

# evaluation
MC_MEASURE = 5
MC_RECON = 2

THREADS_ENV = 'BSI_THREADS'
