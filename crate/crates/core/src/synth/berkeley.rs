use crate::dataset::{AttributeSchema, Column, Dataset, Role};

/// 1973 Berkeley graduate admissions: `(department, gender, admitted, applicants)`.
pub const BERKELEY_COUNTS: [(&str, &str, &str, u32); 24] = [
    ("A", "Female", "Yes", 89),
    ("A", "Female", "No", 19),
    ("A", "Male", "Yes", 512),
    ("A", "Male", "No", 313),
    ("B", "Female", "Yes", 17),
    ("B", "Female", "No", 8),
    ("B", "Male", "Yes", 353),
    ("B", "Male", "No", 207),
    ("C", "Female", "Yes", 202),
    ("C", "Female", "No", 391),
    ("C", "Male", "Yes", 120),
    ("C", "Male", "No", 205),
    ("D", "Female", "Yes", 131),
    ("D", "Female", "No", 244),
    ("D", "Male", "Yes", 138),
    ("D", "Male", "No", 279),
    ("E", "Female", "Yes", 94),
    ("E", "Female", "No", 299),
    ("E", "Male", "Yes", 53),
    ("E", "Male", "No", 138),
    ("F", "Female", "Yes", 24),
    ("F", "Female", "No", 317),
    ("F", "Male", "Yes", 22),
    ("F", "Male", "No", 351),
];

/// The admissions table expanded to one row per applicant.
///
/// `Gender` (Female, Male) is protected, `Admitted` (No, Yes) is the output
/// and `Department` (A to F) is explanatory.
pub fn berkeley() -> Dataset {
    let departments = ["A", "B", "C", "D", "E", "F"];
    let genders = ["Female", "Male"];
    let admitted = ["No", "Yes"];
    let code = |list: &[&str], v: &str| list.iter().position(|x| *x == v).expect("known category") as u32;
    let (mut d, mut g, mut a) = (Vec::new(), Vec::new(), Vec::new());
    for (dept, gender, adm, count) in BERKELEY_COUNTS {
        for _ in 0..count {
            d.push(code(&departments, dept));
            g.push(code(&genders, gender));
            a.push(code(&admitted, adm));
        }
    }
    Dataset::new(
        vec![
            AttributeSchema::categorical("Gender", Role::Protected, genders),
            AttributeSchema::categorical("Department", Role::Explanatory, departments),
            AttributeSchema::categorical("Admitted", Role::Output, admitted),
        ],
        vec![Column::Coded(g), Column::Coded(d), Column::Coded(a)],
    )
    .expect("consistent bundled table")
}
