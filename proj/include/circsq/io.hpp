#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "circsq/dyadic.hpp"
#include "circsq/edge_field.hpp"
#include "circsq/equidecompose.hpp"
#include "circsq/lattice.hpp"

namespace circsq {

// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Piece map CSV: header "x0,..,x{d-1},g0,..,g{d-1},piece", one row per
// matched A vertex in lexicographic order, CRLF line ends.
void write_pieces_csv(std::ostream& out, const LatticeWindow& window, const PieceMap& pieces);
// Reads rows back; piece translations are rebuilt from the rows. Throws
// FormatError naming the row on any schema problem.
PieceMap read_pieces_csv(std::istream& in, const LatticeWindow& window, std::int64_t K, std::int64_t bound);

// One CSV row per stored edge: lower vertex coords, direction index, value.
void write_edge_field_csv(std::ostream& out, const EdgeField<Dyadic>& field);
void write_edge_field_csv(std::ostream& out, const EdgeField<std::int64_t>& field);

// Little-endian records (int64 vertex index, int32 direction index, int64
// numerator, uint32 exponent) after the header "CSQF", d, L, margin, count.
// Zero edges are skipped.
void write_edge_field_binary(std::ostream& out, const EdgeField<Dyadic>& field);
EdgeField<Dyadic> read_edge_field_binary(std::istream& in);

// Two panels side by side: A points coloured by piece on the left, B points
// coloured by the piece that reaches them on the right. Unmatched points are grey.
void write_piece_raster(std::ostream& out, const LatticeWindow& window, const ActionSpec& action,
                        const IndicatorField& field, const PieceMap& pieces, int resolution);

std::string csv_escape(const std::string& field);

}  // namespace circsq
