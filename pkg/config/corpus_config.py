# column names follow the google play scraper export schema
text_column = "content"
rating_column = "score"
time_column = "at"
id_column = "reviewId"

delimiter = ","
encoding = "utf-8"

# added to the cleaned export
clean_text_column = "clean_text"
