#ifndef FTHRESH_KERNEL_HPP
#define FTHRESH_KERNEL_HPP

#include <string_view>

namespace fthresh {

enum class KernelKind { Gaussian, Epanechnikov };

KernelKind parse_kernel(std::string_view name);

/**
 * Scaled kernel K_h(x) = K(x / h) / h. The Gaussian is truncated to zero for
 * |x| / h > 5 (relative mass lost below 1e-6).
 */
class Kernel {
  public:
    Kernel(KernelKind kind, double bandwidth);

    double operator()(double x) const;

    KernelKind kind() const { return kind_; }
    double bandwidth() const { return h_; }
    /// Half-width of the region where the kernel can be nonzero.
    double support_radius() const;

  private:
    KernelKind kind_;
    double h_;
};

inline constexpr double kGaussianTruncation = 5.0;

}

#endif
