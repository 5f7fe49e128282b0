# Adam moment decay rates and denominator offset
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Momentum coefficient for SgdMomentum
SGD_MOMENTUM = 0.9

# Training progress is logged every this many epochs (and at the last epoch)
LOG_EVERY_EPOCHS = 50

# Rows per chunk when materializing per-sample gradients
GRADIENT_CHUNK_ROWS = 256
