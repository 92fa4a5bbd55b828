#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "qscreen/smiles.hpp"

namespace qscreen {

/// Fixed block of 16 molecular descriptors, in the order produced by
/// DescriptorVector::values() and named by descriptor_names().
struct DescriptorVector {
    double count_c = 0;
    double count_n = 0;
    double count_o = 0;
    double count_p = 0;
    double count_s = 0;
    double count_f = 0;
    double count_cl = 0;
    double count_br = 0;
    double count_i = 0;
    double single_bonds = 0;
    double double_bonds = 0;
    double num_aromatic_atoms = 0;
    double aromatic_proportion = 0;
    double num_heteroatoms = 0;
    double mol_wt = 0;
    double num_valence_electrons = 0;

    std::array<double, 16> values() const {
        return {count_c,       count_n,      count_o,
                count_p,       count_s,      count_f,
                count_cl,      count_br,     count_i,
                single_bonds,  double_bonds, num_aromatic_atoms,
                aromatic_proportion, num_heteroatoms, mol_wt,
                num_valence_electrons};
    }
};

inline const std::vector<std::string>& descriptor_names() {
    static const std::vector<std::string> names = {
        "count_C",       "count_N",      "count_O",
        "count_P",       "count_S",      "count_F",
        "count_Cl",      "count_Br",     "count_I",
        "single_bonds",  "double_bonds", "num_aromatic_atoms",
        "aromatic_proportion", "num_heteroatoms", "mol_wt",
        "num_valence_electrons"};
    return names;
}

/// Element counts include aromatic forms (c counts toward count_C).
/// Bond counts cover heavy-atom bonds written in the input: aromatic bonds
/// count toward neither single_bonds nor double_bonds. mol_wt and
/// num_valence_electrons include implicit hydrogens; formal charges subtract
/// from the valence electron total.
inline DescriptorVector compute_descriptors(const MolecularGraph& mol) {
    DescriptorVector d;
    double heavy = 0;
    for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
        const Atom& atom = mol.atoms[i];
        const auto* info = smiles_detail::find_element(atom.element);
        d.mol_wt += info->mass + atom.hydrogens * smiles_detail::find_element("H")->mass;
        d.num_valence_electrons +=
            info->valence_electrons + atom.hydrogens - atom.formal_charge;
        if (!mol.is_heavy(i)) continue;
        heavy += 1;
        if (atom.aromatic) d.num_aromatic_atoms += 1;
        if (atom.element != "C") d.num_heteroatoms += 1;
        if (atom.element == "C") d.count_c += 1;
        else if (atom.element == "N") d.count_n += 1;
        else if (atom.element == "O") d.count_o += 1;
        else if (atom.element == "P") d.count_p += 1;
        else if (atom.element == "S") d.count_s += 1;
        else if (atom.element == "F") d.count_f += 1;
        else if (atom.element == "Cl") d.count_cl += 1;
        else if (atom.element == "Br") d.count_br += 1;
        else if (atom.element == "I") d.count_i += 1;
    }
    for (const Bond& bond : mol.bonds) {
        if (!mol.is_heavy(bond.a) || !mol.is_heavy(bond.b)) continue;
        if (bond.order == BondOrder::Single) d.single_bonds += 1;
        else if (bond.order == BondOrder::Double) d.double_bonds += 1;
    }
    d.aromatic_proportion = heavy > 0 ? d.num_aromatic_atoms / heavy : 0.0;
    return d;
}

} // namespace qscreen
