import numpy as np
from numpy import ndarray


class Stap:
    def kernel(self, x: ndarray, g: ndarray, v: ndarray, y: ndarray, z: ndarray):
        for i in range(0, self.N):
            x[i, 0] = x[i, 0] * g[i]
        y[0:self.N, :] = np.fft.fft(x[0:self.N, :], axis=1)
        z[0:self.N, :] = y[0:self.N, :] * v[0:self.N, :]
