#pragma once

// Product energy eigenbasis bookkeeping shared by the dynamics and history
// layers. Subsystem energies are ascending; the composite index is
// phi * dim_b + chi.

#include <vector>

#include "xft/errors.hpp"

namespace xft {

struct SystemFrame {
    std::vector<double> energies_a;
    std::vector<double> energies_b;

    int dim_a() const { return static_cast<int>(energies_a.size()); }
    int dim_b() const { return static_cast<int>(energies_b.size()); }
    int dim_total() const { return dim_a() * dim_b(); }

    int flat(int phi, int chi) const { return phi * dim_b() + chi; }
    int phi_of(int flat_index) const { return flat_index / dim_b(); }
    int chi_of(int flat_index) const { return flat_index % dim_b(); }

    double energy_a(int phi) const { return energies_a[static_cast<std::size_t>(phi)]; }
    double energy_b(int chi) const { return energies_b[static_cast<std::size_t>(chi)]; }
    double total_energy(int flat_index) const {
        return energy_a(phi_of(flat_index)) + energy_b(chi_of(flat_index));
    }

    void check_index(int phi, int chi) const {
        if (phi < 0 || phi >= dim_a() || chi < 0 || chi >= dim_b())
            throw IndexError("outcome index out of range");
    }
};

} // namespace xft
