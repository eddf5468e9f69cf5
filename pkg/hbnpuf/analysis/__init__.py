""" Analyses run on collected CRP datasets: metrics, entropy, sensitivity. """
