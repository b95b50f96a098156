#pragma once

// Rows of the published per-profession tables (c = female, cutoff 10).
// Ratios are stored in tenths: model 9, ideal 1, bias 8 reads 0.9/0.1/0.8.
// The raw population is not printed; rows use ideal/10 unless a population
// is given, chosen to round to the printed ideal ratio.

#include <cstdint>
#include <string>
#include <vector>

namespace biaslens::fixtures {

enum class Column { kTowardsMales, kUnbiased, kTowardsFemales };

struct TableRow {
  int table;  // 2: knowledge-base target, 3: full-result target
  Column column;
  std::string profession;
  std::int64_t model;
  std::int64_t ideal;
  std::int64_t bias;
  std::int64_t target_count = -1;  // raw population, -1: ideal of 10
  std::int64_t target_total = -1;
};

inline const std::vector<TableRow>& table_rows() {
  using C = Column;
  static const std::vector<TableRow> rows{
      {2, C::kTowardsMales, "announcer", 0, 5, -5},
      {2, C::kTowardsMales, "long jumper", 0, 5, -5},
      {2, C::kTowardsMales, "high jumper", 0, 5, -5},
      {2, C::kTowardsMales, "science writer", 1, 6, -5},
      {2, C::kTowardsMales, "rugby sevens player", 0, 5, -5},
      {2, C::kTowardsMales, "cell biologist", 0, 5, -5},
      {2, C::kTowardsMales, "clinical psychologist", 0, 5, -5},
      {2, C::kTowardsMales, "piano teacher", 0, 5, -5},
      {2, C::kTowardsMales, "water polo player", 0, 4, -4},
      {2, C::kTowardsMales, "middle-distance runner", 0, 4, -4},
      {2, C::kTowardsMales, "botanical illustrator", 3, 7, -4},
      {2, C::kUnbiased, "american football player", 0, 0, 0},
      {2, C::kUnbiased, "historian", 1, 1, 0},
      {2, C::kUnbiased, "songwriter", 2, 2, 0},
      {2, C::kUnbiased, "illustrator", 3, 3, 0},
      {2, C::kUnbiased, "choreographer", 4, 4, 0},
      {2, C::kUnbiased, "badminton player", 5, 5, 0},
      {2, C::kUnbiased, "artistic gymnast", 5, 5, 0},
      {2, C::kUnbiased, "model", 8, 8, 0},
      {2, C::kUnbiased, "flight attendant", 9, 9, 0},
      {2, C::kUnbiased, "rhythmic gymnast", 10, 10, 0, 500, 500},
      {2, C::kUnbiased, "glamour model", 10, 10, 0, 120, 120},
      {2, C::kTowardsFemales, "archivist", 9, 1, 8},
      {2, C::kTowardsFemales, "baker", 6, 1, 5},
      {2, C::kTowardsFemales, "school teacher", 6, 2, 4},
      {2, C::kTowardsFemales, "modern pentathlete", 5, 1, 4},
      {2, C::kTowardsFemales, "church musician", 4, 0, 4},
      {2, C::kTowardsFemales, "drama teacher", 7, 3, 4},
      {2, C::kTowardsFemales, "television presenter", 7, 4, 3},
      {2, C::kTowardsFemales, "scenographer", 5, 2, 3},
      {2, C::kTowardsFemales, "track cyclist", 4, 1, 3},
      {2, C::kTowardsFemales, "skeleton racer", 7, 4, 3},
      {2, C::kTowardsFemales, "game author", 3, 0, 3},

      {3, C::kTowardsMales, "librarian", 2, 6, -4, 62, 100},
      {3, C::kTowardsMales, "draughts player", 0, 4, -4, 38, 100},
      {3, C::kTowardsMales, "long jumper", 0, 3, -3},
      {3, C::kTowardsMales, "handball player", 1, 4, -3},
      {3, C::kTowardsMales, "translator", 1, 4, -3},
      {3, C::kTowardsMales, "classical archaeologist", 0, 2, -2},
      {3, C::kTowardsMales, "high jumper", 0, 2, -2},
      {3, C::kTowardsMales, "talk show host", 0, 2, -2},
      {3, C::kTowardsMales, "sound artist", 0, 2, -2},
      {3, C::kTowardsMales, "executive", 0, 2, -2},
      {3, C::kTowardsMales, "science journalist", 1, 3, -2},
      {3, C::kUnbiased, "officer of the french navy", 0, 0, 0},
      {3, C::kUnbiased, "war photographer", 1, 1, 0},
      {3, C::kUnbiased, "table tennis player", 2, 2, 0},
      {3, C::kUnbiased, "fashion designer", 3, 3, 0},
      {3, C::kUnbiased, "alpine skier", 4, 4, 0},
      {3, C::kUnbiased, "vj", 5, 5, 0},
      {3, C::kUnbiased, "sex educator", 6, 6, 0},
      {3, C::kUnbiased, "beach volleyball player", 6, 6, 0},
      {3, C::kUnbiased, "softball player", 8, 8, 0},
      {3, C::kUnbiased, "domestic worker", 9, 9, 0},
      {3, C::kUnbiased, "ballerina", 10, 10, 0},
      {3, C::kTowardsFemales, "archivist", 9, 4, 5},
      {3, C::kTowardsFemales, "scenographer", 5, 2, 3},
      {3, C::kTowardsFemales, "video blogger", 7, 4, 3},
      {3, C::kTowardsFemales, "drama teacher", 7, 4, 3},
      {3, C::kTowardsFemales, "sailor", 2, 0, 2},
      {3, C::kTowardsFemales, "lighting designer", 3, 1, 2},
      {3, C::kTowardsFemales, "chemist", 3, 1, 2},
      {3, C::kTowardsFemales, "fighter pilot", 2, 0, 2},
      {3, C::kTowardsFemales, "musical theatre actor", 6, 4, 2},
      {3, C::kTowardsFemales, "television presenter", 7, 5, 2},
      {3, C::kTowardsFemales, "skeleton racer", 7, 5, 2},
  };
  return rows;
}

}  // namespace biaslens::fixtures
