#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qscreen {

enum class BondOrder { Single, Double, Triple, Aromatic };

struct Atom {
    std::string element;     // symbol, e.g. "C", "Cl"; explicit hydrogens use "H"
    bool aromatic = false;
    int formal_charge = 0;
    int hydrogens = 0;       // attached H count (implicit or bracket-declared)
    bool bracket = false;    // written in [] with a declared H count
};

struct Bond {
    std::size_t a = 0;
    std::size_t b = 0;
    BondOrder order = BondOrder::Single;
};

/// Molecular graph produced by parse_smiles. All ring closures are resolved;
/// hydrogens atoms appear only when written explicitly ([H]), otherwise they
/// live in Atom::hydrogens.
struct MolecularGraph {
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;

    bool is_heavy(std::size_t i) const { return atoms[i].element != "H"; }

    std::size_t heavy_atom_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (is_heavy(i)) ++n;
        return n;
    }
};

/// Parse failure with the byte offset into the input where it was detected.
class SmilesError : public std::runtime_error {
public:
    SmilesError(const std::string& message, std::size_t position)
        : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

namespace smiles_detail {

struct ElementInfo {
    const char* symbol;
    double mass;               // IUPAC standard atomic weight, 3 decimals
    int valence_electrons;
    int valences[3];           // default valences, ascending; 0 = unused slot
    bool organic_subset;       // may be written without brackets
    bool aromatic_lowercase;   // may be written as a lowercase aromatic atom
    bool aromatic_pi_bump;     // aromatic form carries a double bond by default
};

// Aromatic c/n/p are written lowercase when they contribute a pi bond to the
// ring (pyridine-type); lone-pair donors (o, s, pyrrole [nH]) do not, which
// is what makes furan's oxygen come out with zero hydrogens without any
// aromaticity perception.
inline const ElementInfo* element_table() {
    static const ElementInfo table[] = {
        {"H", 1.008, 1, {1, 0, 0}, false, false, false},
        {"B", 10.811, 3, {3, 0, 0}, true, true, false},
        {"C", 12.011, 4, {4, 0, 0}, true, true, true},
        {"N", 14.007, 5, {3, 0, 0}, true, true, true},
        {"O", 15.999, 6, {2, 0, 0}, true, true, false},
        {"F", 18.998, 7, {1, 0, 0}, true, false, false},
        {"P", 30.974, 5, {3, 5, 0}, true, true, true},
        {"S", 32.065, 6, {2, 4, 6}, true, true, false},
        {"Cl", 35.453, 7, {1, 0, 0}, true, false, false},
        {"Br", 79.904, 7, {1, 0, 0}, true, false, false},
        {"I", 126.904, 7, {1, 0, 0}, true, false, false},
    };
    return table;
}
inline constexpr std::size_t element_table_size = 11;

inline const ElementInfo* find_element(std::string_view symbol) {
    const ElementInfo* t = element_table();
    for (std::size_t i = 0; i < element_table_size; ++i)
        if (symbol == t[i].symbol) return &t[i];
    return nullptr;
}

inline int bond_order_sum_contribution(BondOrder o) {
    switch (o) {
        case BondOrder::Single: return 1;
        case BondOrder::Double: return 2;
        case BondOrder::Triple: return 3;
        case BondOrder::Aromatic: return 1;
    }
    return 1;
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    MolecularGraph run() {
        if (s_.empty()) throw SmilesError("empty SMILES", 0);
        while (pos_ < s_.size()) step();
        finish();
        return std::move(graph_);
    }

private:
    struct RingSlot {
        std::size_t atom;
        std::optional<BondOrder> order;
        std::size_t position;
    };

    void step() {
        const char c = s_[pos_];
        if (c == '(') {
            if (prev_ < 0) throw SmilesError("branch with no preceding atom", pos_);
            stack_.push_back(prev_);
            ++pos_;
        } else if (c == ')') {
            if (stack_.empty()) throw SmilesError("unmatched ')'", pos_);
            if (pending_) throw SmilesError("dangling bond before ')'", pos_);
            prev_ = stack_.back();
            stack_.pop_back();
            ++pos_;
        } else if (c == '-' || c == '=' || c == '#' || c == ':') {
            if (pending_) throw SmilesError("duplicate bond symbol", pos_);
            pending_ = c == '-'   ? BondOrder::Single
                       : c == '=' ? BondOrder::Double
                       : c == '#' ? BondOrder::Triple
                                  : BondOrder::Aromatic;
            ++pos_;
        } else if (c == '/' || c == '\\') {
            // stereo bond markers: accepted, treated as plain single bonds
            if (pending_) throw SmilesError("duplicate bond symbol", pos_);
            pending_ = BondOrder::Single;
            ++pos_;
        } else if (c == '.') {
            if (pending_) throw SmilesError("bond before '.'", pos_);
            prev_ = -1;
            ++pos_;
        } else if (c >= '0' && c <= '9') {
            ring_closure(static_cast<std::size_t>(c - '0'), pos_);
            ++pos_;
        } else if (c == '%') {
            if (pos_ + 2 >= s_.size() || !isdigit_(s_[pos_ + 1]) || !isdigit_(s_[pos_ + 2]))
                throw SmilesError("'%' ring closure needs two digits", pos_);
            const std::size_t label = static_cast<std::size_t>((s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0'));
            ring_closure(label, pos_);
            pos_ += 3;
        } else if (c == '[') {
            bracket_atom();
        } else if (isalpha_(c)) {
            organic_atom();
        } else {
            throw SmilesError(std::string("unexpected character '") + c + "'", pos_);
        }
    }

    void finish() {
        if (!stack_.empty()) throw SmilesError("unmatched '('", s_.size());
        if (pending_) throw SmilesError("dangling bond at end of input", s_.size());
        for (const auto& [label, slot] : open_rings_)
            throw SmilesError("unmatched ring closure " + std::to_string(label), slot.position);
        assign_implicit_hydrogens();
    }

    void organic_atom() {
        const std::size_t at = pos_;
        const char c = s_[pos_];
        std::string symbol(1, c);
        bool aromatic = false;
        if (c >= 'a' && c <= 'z') {
            symbol[0] = static_cast<char>(c - 'a' + 'A');
            aromatic = true;
            const ElementInfo* e = find_element(symbol);
            if (!e || !e->aromatic_lowercase)
                throw SmilesError(std::string("unknown element token '") + c + "'", at);
            ++pos_;
        } else {
            // two-letter organic symbols (Cl, Br) win over their one-letter prefix
            if (pos_ + 1 < s_.size()) {
                const std::string two = symbol + s_[pos_ + 1];
                const ElementInfo* e2 = find_element(two);
                if (e2 && e2->organic_subset) {
                    symbol = two;
                    pos_ += 2;
                    add_atom(symbol, aromatic, 0, -1, false, at);
                    return;
                }
            }
            const ElementInfo* e = find_element(symbol);
            if (!e || !e->organic_subset)
                throw SmilesError("unknown element token '" + symbol + "'", at);
            ++pos_;
        }
        add_atom(symbol, aromatic, 0, -1, false, at);
    }

    void bracket_atom() {
        const std::size_t open = pos_;
        ++pos_;
        if (pos_ < s_.size() && isdigit_(s_[pos_]))
            throw SmilesError("isotope specifications are not supported", pos_);
        if (pos_ >= s_.size()) throw SmilesError("unterminated bracket atom", open);

        std::string symbol;
        bool aromatic = false;
        const char c = s_[pos_];
        if (c >= 'a' && c <= 'z') {
            symbol = std::string(1, static_cast<char>(c - 'a' + 'A'));
            aromatic = true;
            const ElementInfo* e = find_element(symbol);
            if (!e || !e->aromatic_lowercase)
                throw SmilesError(std::string("unknown element token '") + c + "'", pos_);
            ++pos_;
        } else if (c >= 'A' && c <= 'Z') {
            symbol = std::string(1, c);
            if (pos_ + 1 < s_.size() && s_[pos_ + 1] >= 'a' && s_[pos_ + 1] <= 'z' &&
                find_element(symbol + s_[pos_ + 1])) {
                symbol += s_[pos_ + 1];
                ++pos_;
            } else if (!find_element(symbol)) {
                throw SmilesError("unknown element token '" + symbol + "'", pos_);
            }
            ++pos_;
        } else {
            throw SmilesError("expected element symbol in bracket", pos_);
        }

        // chirality markers are accepted and ignored
        while (pos_ < s_.size() && s_[pos_] == '@') ++pos_;

        int hydrogens = 0;
        if (pos_ < s_.size() && s_[pos_] == 'H') {
            ++pos_;
            hydrogens = 1;
            if (pos_ < s_.size() && isdigit_(s_[pos_])) {
                hydrogens = 0;
                while (pos_ < s_.size() && isdigit_(s_[pos_]))
                    hydrogens = hydrogens * 10 + (s_[pos_++] - '0');
            }
        }

        int charge = 0;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
            const int sign = s_[pos_] == '+' ? 1 : -1;
            const char mark = s_[pos_];
            ++pos_;
            if (pos_ < s_.size() && isdigit_(s_[pos_])) {
                int mag = 0;
                while (pos_ < s_.size() && isdigit_(s_[pos_]))
                    mag = mag * 10 + (s_[pos_++] - '0');
                charge = sign * mag;
            } else {
                charge = sign;
                while (pos_ < s_.size() && s_[pos_] == mark) {
                    charge += sign;
                    ++pos_;
                }
            }
        }

        // atom class (":n") carries no structural information
        if (pos_ < s_.size() && s_[pos_] == ':') {
            ++pos_;
            if (pos_ >= s_.size() || !isdigit_(s_[pos_]))
                throw SmilesError("expected digits after ':' atom class", pos_);
            while (pos_ < s_.size() && isdigit_(s_[pos_])) ++pos_;
        }

        if (pos_ >= s_.size() || s_[pos_] != ']')
            throw SmilesError("expected ']'", pos_ < s_.size() ? pos_ : s_.size());
        ++pos_;

        add_atom(symbol, aromatic, charge, hydrogens, true, open);
    }

    void add_atom(const std::string& symbol, bool aromatic, int charge, int declared_h,
                  bool bracket, std::size_t at) {
        Atom atom;
        atom.element = symbol;
        atom.aromatic = aromatic;
        atom.formal_charge = charge;
        atom.hydrogens = declared_h >= 0 ? declared_h : 0;
        atom.bracket = bracket;
        const std::size_t index = graph_.atoms.size();
        graph_.atoms.push_back(atom);
        atom_positions_.push_back(at);
        needs_implicit_h_.push_back(!bracket);

        if (prev_ >= 0) {
            const auto a = static_cast<std::size_t>(prev_);
            BondOrder order = pending_ ? *pending_ : default_order(a, index);
            add_bond(a, index, order, at);
        }
        pending_.reset();
        prev_ = static_cast<long>(index);
    }

    BondOrder default_order(std::size_t a, std::size_t b) const {
        return graph_.atoms[a].aromatic && graph_.atoms[b].aromatic ? BondOrder::Aromatic
                                                                    : BondOrder::Single;
    }

    void ring_closure(std::size_t label, std::size_t at) {
        if (prev_ < 0) throw SmilesError("ring closure with no preceding atom", at);
        const auto atom = static_cast<std::size_t>(prev_);
        auto it = open_rings_.end();
        for (auto i = open_rings_.begin(); i != open_rings_.end(); ++i)
            if (i->first == label) { it = i; break; }

        if (it == open_rings_.end()) {
            open_rings_.push_back({label, {atom, pending_, at}});
            pending_.reset();
            return;
        }

        const RingSlot slot = it->second;
        open_rings_.erase(it);
        if (slot.atom == atom) throw SmilesError("ring closure bonds atom to itself", at);
        BondOrder order;
        if (slot.order && pending_) {
            if (*slot.order != *pending_)
                throw SmilesError("conflicting ring closure bond orders", at);
            order = *pending_;
        } else if (slot.order) {
            order = *slot.order;
        } else if (pending_) {
            order = *pending_;
        } else {
            order = default_order(slot.atom, atom);
        }
        pending_.reset();
        add_bond(slot.atom, atom, order, at);
    }

    void add_bond(std::size_t a, std::size_t b, BondOrder order, std::size_t at) {
        for (const Bond& bond : graph_.bonds)
            if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
                throw SmilesError("duplicate bond between atoms " + std::to_string(a) + " and " +
                                      std::to_string(b),
                                  at);
        graph_.bonds.push_back({a, b, order});
    }

    void assign_implicit_hydrogens() {
        std::vector<int> bond_sum(graph_.atoms.size(), 0);
        for (const Bond& bond : graph_.bonds) {
            const int v = bond_order_sum_contribution(bond.order);
            bond_sum[bond.a] += v;
            bond_sum[bond.b] += v;
        }
        for (std::size_t i = 0; i < graph_.atoms.size(); ++i) {
            if (!needs_implicit_h_[i]) continue;
            Atom& atom = graph_.atoms[i];
            const ElementInfo* e = find_element(atom.element);
            int sum = bond_sum[i];
            if (atom.aromatic && e->aromatic_pi_bump) sum += 1;
            int h = -1;
            for (const int v : e->valences) {
                if (v == 0) break;
                if (v >= sum) { h = v - sum; break; }
            }
            if (h < 0)
                throw SmilesError("valence impossible for " + atom.element + " (bond order sum " +
                                      std::to_string(sum) + ")",
                                  atom_positions_[i]);
            atom.hydrogens = h;
        }
    }

    static bool isdigit_(char c) { return c >= '0' && c <= '9'; }
    static bool isalpha_(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }

    std::string_view s_;
    std::size_t pos_ = 0;
    MolecularGraph graph_;
    std::vector<std::size_t> atom_positions_;
    std::vector<bool> needs_implicit_h_;
    long prev_ = -1;
    std::vector<long> stack_;
    std::optional<BondOrder> pending_;
    std::vector<std::pair<std::size_t, RingSlot>> open_rings_;
};

} // namespace smiles_detail

/// Parses a practical organic-subset SMILES string: B/C/N/O/P/S/halogens,
/// lowercase aromatic atoms, branches, ring closures (1-9 and %nn), bond
/// symbols - = # :, bracket atoms with charge and H count, '.' separators.
/// Lowercase input is trusted as aromatic; no aromaticity perception is done.
/// Stereo markers are accepted and ignored. Throws SmilesError with the byte
/// position on malformed input.
inline MolecularGraph parse_smiles(std::string_view s) {
    return smiles_detail::Parser(s).run();
}

} // namespace qscreen
