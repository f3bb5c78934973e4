#include "tsim/ybus.hpp"

namespace tsim {

Eigen::MatrixXcd build_ybus(const Case& c, const Topology& topo) {
    const int n = static_cast<int>(c.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);

    for (int k = 0; k < static_cast<int>(c.branches.size()); ++k) {
        if (!topo.branch_in_service[k]) continue;
        const Branch& br = c.branches[k];
        const Complex y_series = 1.0 / Complex(br.r, br.x);
        const Complex y_half_shunt(0.0, br.b_shunt / 2.0);
        y(br.from, br.from) += y_series + y_half_shunt;
        y(br.to, br.to) += y_series + y_half_shunt;
        y(br.from, br.to) -= y_series;
        y(br.to, br.from) -= y_series;
    }

    for (int b = 0; b < n; ++b) {
        if (topo.bus_faulted[b]) {
            y(b, b) += Complex(kFaultAdmittance, 0.0);
        }
    }
    return y;
}

}  // namespace tsim
