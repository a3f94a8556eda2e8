# svperturb
# Singular-vector perturbation analysis under Gaussian noise
