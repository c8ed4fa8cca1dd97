# Available options: "cnn", "bilstm"
model_kinds = ("cnn", "bilstm")

embedding_dim = 64
cnn_filters = 128
cnn_kernel_size = 5
lstm_units = 64
dense_units = 64
dropout_rate = 0.5
num_classes = 3

# Available options: "last" (final hidden state of each direction), "max" (global max pool over both sequences)
bilstm_pooling = "last"

epochs = 50
batch_size = 32
validation_fraction = 0.1
patience = 5
restore_best = True

# adam defaults
learning_rate = 1e-3
beta1 = 0.9
beta2 = 0.999
epsilon = 1e-7

embedding_init_scale = 0.05
forget_bias = 1.0

show_progress = True
