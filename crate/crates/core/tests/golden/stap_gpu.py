import numpy as np
from numpy import ndarray


try:
    import cupy as cp
except ImportError:
    cp = None
import amphc_rt


def _loomc_pfor_Stap_kernel_0(__use_gpu, __lo, __hi, g, v, x, y, z, __p_self_N):
    xp = amphc_rt.get_xp(__use_gpu)
    g = xp.asarray(g)
    v = xp.asarray(v)
    x = xp.array(x)
    y = xp.array(y)
    z = xp.array(z)
    x[__lo:__hi, 0] = x[__lo:__hi, 0] * g[__lo:__hi]
    y[__lo:__hi, 0:x.shape[1]] = xp.fft.fft(x[__lo:__hi, :], axis=-1)
    z[__lo:__hi, :] = y[__lo:__hi, 0:z.shape[1]] * v[__lo:__hi, 0:z.shape[1]]
    __out = (x[__lo:__hi], y[__lo:__hi], z[__lo:__hi])
    if xp is not np:
        __out = tuple(__a.get() for __a in __out)
    return __out


class Stap:
    def kernel(self, x: ndarray, g: ndarray, v: ndarray, y: ndarray, z: ndarray):
        if type(x) == np.ndarray and type(g) == np.ndarray and type(v) == np.ndarray and type(y) == np.ndarray and type(z) == np.ndarray:
            if x.ndim == 2 and g.ndim == 1 and v.ndim == 2 and y.ndim == 2 and z.ndim == 2:
                if self.N >= 64:
                    # pfor(output={x, y, z}, input={g, v, x, y}, transfer=cupy)
                    __use_gpu = cp is not None
                    __nt = amphc_rt.num_workers()
                    __step = max(1, -(-self.N // __nt))
                    __chunks = [(__c, min(__c + __step, self.N)) for __c in range(0, self.N, __step)]
                    __hs = [amphc_rt.submit(_loomc_pfor_Stap_kernel_0, __use_gpu, __c, __e, g, v, x, y, z, self.N) for __c, __e in __chunks]
                    for (__c, __e), __r in zip(__chunks, amphc_rt.get(__hs)):
                        x[__c:__e] = __r[0]
                        y[__c:__e] = __r[1]
                        z[__c:__e] = __r[2]
                else:
                    x[0:self.N, 0] = x[0:self.N, 0] * g[0:self.N]
                    y[0:self.N, 0:x.shape[1]] = np.fft.fft(x[0:self.N, :], axis=-1)
                    z[0:self.N, :] = y[0:self.N, 0:z.shape[1]] * v[0:self.N, 0:z.shape[1]]
            else:
                for i in range(0, self.N):
                    x[i, 0] = x[i, 0] * g[i]
                y[0:self.N, :] = np.fft.fft(x[0:self.N, :], axis=1)
                z[0:self.N, :] = y[0:self.N, :] * v[0:self.N, :]
        else:
            for i in range(0, self.N):
                x[i, 0] = x[i, 0] * g[i]
            y[0:self.N, :] = np.fft.fft(x[0:self.N, :], axis=1)
            z[0:self.N, :] = y[0:self.N, :] * v[0:self.N, :]
